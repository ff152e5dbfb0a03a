#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cterm/attest.hpp"

using namespace cterm;

namespace {

bmac::MemoryImage random_image(size_t size, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Bytes data(size);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    return bmac::MemoryImage::flash(std::move(data));
}

}  // namespace

TEST_CASE("frames round-trip") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        attest::Message msg;
        switch (t % 3) {
            case 0:
                msg = attest::AttestRequest{static_cast<uint32_t>(rng()),
                                            (t % 2) ? bmac::HashAlg::Keccak256 : bmac::HashAlg::Sha256};
                break;
            case 1:
                msg = attest::AttestResponse{bmac::AuthCode{static_cast<uint16_t>(rng())}};
                break;
            default:
                msg = attest::ProtocolError{static_cast<uint8_t>(rng())};
        }
        Bytes frame = attest::encode(msg);
        attest::Message back = attest::decode(frame);
        CHECK(back.index() == msg.index());
        if (auto* req = std::get_if<attest::AttestRequest>(&msg)) {
            auto& b = std::get<attest::AttestRequest>(back);
            CHECK(b.seed == req->seed);
            CHECK(b.alg == req->alg);
        } else if (auto* resp = std::get_if<attest::AttestResponse>(&msg)) {
            CHECK(std::get<attest::AttestResponse>(back).code == resp->code);
        } else {
            CHECK(std::get<attest::ProtocolError>(back).reason ==
                  std::get<attest::ProtocolError>(msg).reason);
        }
    }
}

TEST_CASE("malformed frames are rejected, not crashed on") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 2000; ++t) {
        Bytes junk(rng() % 40);
        for (auto& b : junk) b = static_cast<uint8_t>(rng());
        try {
            attest::decode(junk);
        } catch (const attest::FramingError&) {
            // expected for most inputs
        }
    }
    SUCCEED();
}

TEST_CASE("honest session accepts; completeness over random cases") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 30; ++t) {
        auto image = random_image(64 + rng() % 1024, rng());
        attest::DeviceConfig cfg;
        attest::SimDevice device(image, cfg);
        attest::Verifier verifier(image, cfg.cost);
        uint32_t seed = static_cast<uint32_t>(1 + rng() % (num::MinstdState::modulus - 2));
        auto transcript = attest::run_session(device, verifier, seed);
        CHECK(transcript.accepted);
        CHECK(transcript.frames.size() == 2);
    }
}

TEST_CASE("corrupted response frame is rejected") {
    auto image = random_image(256, 6);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    attest::Verifier verifier(image, cfg.cost);
    auto transcript = attest::run_session(device, verifier, 12345, bmac::HashAlg::Sha256,
                                          [](Bytes frame) -> std::optional<Bytes> {
                                              frame.back() ^= 0x01;  // flip one code bit
                                              return frame;
                                          });
    CHECK_FALSE(transcript.accepted);
}

TEST_CASE("dropped response is a timeout") {
    auto image = random_image(256, 7);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    attest::Verifier verifier(image, cfg.cost);
    auto transcript = attest::run_session(device, verifier, 5, bmac::HashAlg::Sha256,
                                          [](Bytes) -> std::optional<Bytes> { return std::nullopt; });
    CHECK_FALSE(transcript.accepted);
    CHECK(transcript.verdict.find("timeout") != std::string::npos);
}

TEST_CASE("replayed stale response fails for a fresh seed") {
    auto image = random_image(300, 8);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    attest::Verifier verifier(image, cfg.cost);

    auto stale = device.respond({1111, bmac::HashAlg::Sha256});
    std::mt19937_64 rng(9);
    int rejected = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        uint32_t fresh = static_cast<uint32_t>(2222 + rng() % 1000000);
        if (!verifier.check(fresh, bmac::HashAlg::Sha256, stale.code).accept) ++rejected;
    }
    CHECK(rejected == trials);
}

TEST_CASE("stop event deltas follow the loss rules") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 20000; ++t) {
        int64_t d = attest::stop_event_delta(attest::LossRule::Delay616263, rng);
        bool valid = d == 5 || d == 5 - 61 || d == 5 - 62 || d == 5 - 63;
        REQUIRE(valid);
    }
    for (int t = 0; t < 20000; ++t) {
        int64_t d = attest::stop_event_delta(attest::LossRule::UniformSubcount, rng);
        REQUIRE(d <= 5);
        REQUIRE(d >= 5 - 63);  // loss never exceeds 63 cycles per event
    }
}

TEST_CASE("stop&start mean lands in the calibration band") {
    auto stats = attest::stop_start_experiment(8192, 400);
    CHECK(stats.mean_extra_cycles_per_byte > 1.5);
    CHECK(stats.mean_extra_cycles_per_byte < 2.5);
    CHECK(stats.detection_rate >= 0.95);

    CHECK_THROWS_AS(attest::stop_start_experiment(8192, 0), std::invalid_argument);
    CHECK_THROWS_AS(attest::stop_start_experiment(32, 10), std::invalid_argument);
}

TEST_CASE("stop&start detection is monotone in image size") {
    auto small = attest::stop_start_experiment(1024, 150, attest::LossRule::Delay616263, {}, 3);
    auto large = attest::stop_start_experiment(16384, 150, attest::LossRule::Delay616263, {}, 3);
    CHECK(large.detection_rate >= small.detection_rate);
}

TEST_CASE("honest device reports zero extra cycles") {
    auto image = random_image(512, 11);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    auto att = device.respond({77, bmac::HashAlg::Sha256});
    CHECK(att.extra_cycles == 0);
    CHECK(device.prescaler_subcount() < 64);
}

TEST_CASE("stop&start device is rejected") {
    auto image = random_image(4096, 12);
    attest::DeviceConfig honest_cfg;
    attest::Verifier verifier(image, honest_cfg.cost);

    attest::DeviceConfig attack_cfg;
    attack_cfg.attack.kind = attest::AttackConfig::Kind::StopStart;
    attest::SimDevice attacker(image, attack_cfg);

    std::mt19937_64 rng(13);
    int rejected = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        uint32_t seed = static_cast<uint32_t>(1 + rng() % 1000000);
        auto transcript = attest::run_session(attacker, verifier, seed);
        if (!transcript.accepted) ++rejected;
    }
    CHECK(rejected >= 48);  // >= 95%
}

TEST_CASE("hideout device attests a different image and is rejected") {
    // Image with an adjacent 64-byte duplicate the attacker compresses.
    Bytes data(2048);
    std::mt19937_64 rng(14);
    for (auto& b : data) b = static_cast<uint8_t>(1 + rng() % 255);
    for (size_t i = 0; i < 64; ++i) data[300 + 64 + i] = data[300 + i];
    bmac::MemoryImage image = bmac::MemoryImage::flash(data);

    auto report = shards::find_shards(data, 16);
    REQUIRE_FALSE(report.shards.empty());
    auto plan = shards::plan_compression(report);
    REQUIRE_FALSE(plan.shards.empty());

    attest::DeviceConfig cfg;
    cfg.attack.kind = attest::AttackConfig::Kind::Hideout;
    cfg.attack.plan = plan;
    cfg.attack.payload = {0xde, 0xad, 0xbe, 0xef};
    attest::SimDevice hideout(image, cfg);
    attest::Verifier verifier(image, cfg.cost);

    for (uint32_t seed : {1u, 99u, 31337u}) {
        auto transcript = attest::run_session(hideout, verifier, seed);
        CHECK_FALSE(transcript.accepted);
    }

    // payload larger than the freed space is refused
    attest::DeviceConfig too_big = cfg;
    too_big.attack.payload.assign(10000, 0x41);
    CHECK_THROWS_AS(attest::SimDevice(image, too_big), std::invalid_argument);
}

TEST_CASE("tick slack policy tolerates small timing drift when enabled") {
    auto image = random_image(512, 15);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    auto att = device.respond({321, bmac::HashAlg::Sha256});

    bmac::BmacResult shifted;
    shifted.cycles = att.cycles + bmac::kTimerPrescale;  // +1 tick
    // reconstruct the shifted code through the device path instead
    attest::Verifier strict(image, cfg.cost);
    attest::Verifier lenient(image, cfg.cost, {2});

    bmac::BmacResult honest = bmac::bmac_compute(image, 321, bmac::HashAlg::Sha256, cfg.cost);
    bmac::BmacResult drifted = honest;
    drifted.cycles += bmac::kTimerPrescale;
    auto drifted_code = bmac::auth_code(drifted);

    CHECK_FALSE(strict.check(321, bmac::HashAlg::Sha256, drifted_code).accept);
    CHECK(lenient.check(321, bmac::HashAlg::Sha256, drifted_code).accept);
}

TEST_CASE("transcript hex dump has one line per frame") {
    auto image = random_image(128, 16);
    attest::DeviceConfig cfg;
    attest::SimDevice device(image, cfg);
    attest::Verifier verifier(image, cfg.cost);
    auto transcript = attest::run_session(device, verifier, 42);
    auto dump = transcript.to_hex_lines();
    CHECK(std::count(dump.begin(), dump.end(), '\n') == 2);
}
