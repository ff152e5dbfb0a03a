#pragma once

// Simulated attested device and verifier over a framed byte channel, with
// injectable attacks: stop&start timer manipulation (hide work by pausing
// the tick counter) and shard-compression hideouts (malware in freed space).

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cterm/bmac.hpp"
#include "cterm/bytes.hpp"
#include "cterm/shards.hpp"

namespace cterm::attest {

// Wire format: 4-byte big-endian length (type + payload), 1-byte type,
// payload. Request: 4-byte seed BE + 1-byte hash id. Response: 2-byte code
// BE. Error: 1-byte reason.
enum class MsgType : uint8_t { Request = 0x01, Response = 0x02, Error = 0x7f };

struct AttestRequest {
    uint32_t seed = 0;
    bmac::HashAlg alg = bmac::HashAlg::Sha256;
};

struct AttestResponse {
    bmac::AuthCode code{};
};

struct ProtocolError {
    uint8_t reason = 0;
};

using Message = std::variant<AttestRequest, AttestResponse, ProtocolError>;

inline constexpr uint8_t kErrMalformed = 0x01;

inline Bytes encode(const Message& msg) {
    Bytes payload;
    uint8_t type = 0;
    if (const auto* req = std::get_if<AttestRequest>(&msg)) {
        type = static_cast<uint8_t>(MsgType::Request);
        put_be32(payload, req->seed);
        payload.push_back(static_cast<uint8_t>(req->alg));
    } else if (const auto* resp = std::get_if<AttestResponse>(&msg)) {
        type = static_cast<uint8_t>(MsgType::Response);
        put_be16(payload, resp->code.value);
    } else {
        type = static_cast<uint8_t>(MsgType::Error);
        payload.push_back(std::get<ProtocolError>(msg).reason);
    }
    Bytes frame;
    put_be32(frame, static_cast<uint32_t>(1 + payload.size()));
    frame.push_back(type);
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

struct FramingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Message decode(std::span<const uint8_t> frame) {
    if (frame.size() < 5) throw FramingError("frame shorter than header");
    uint32_t length = get_be32(frame, 0);
    if (frame.size() != 4 + static_cast<size_t>(length)) throw FramingError("length field mismatch");
    uint8_t type = frame[4];
    std::span<const uint8_t> payload = frame.subspan(5);
    switch (static_cast<MsgType>(type)) {
        case MsgType::Request: {
            if (payload.size() != 5) throw FramingError("bad request payload size");
            uint32_t seed = get_be32(payload, 0);
            auto alg = static_cast<bmac::HashAlg>(payload[4]);
            if (alg != bmac::HashAlg::Sha256 && alg != bmac::HashAlg::Keccak256)
                throw FramingError("unknown hash id");
            return AttestRequest{seed, alg};
        }
        case MsgType::Response: {
            if (payload.size() != 2) throw FramingError("bad response payload size");
            return AttestResponse{bmac::AuthCode{get_be16(payload, 0)}};
        }
        case MsgType::Error: {
            if (payload.size() != 1) throw FramingError("bad error payload size");
            return ProtocolError{payload[0]};
        }
        default:
            throw FramingError("unknown message type");
    }
}

// How a stop event corrupts the measured time. The sub-clock divides the
// CPU clock by 64; stopping the timer while hidden work runs costs the
// attacker 5 measured cycles per byte (2-cycle stop prefix + 3-cycle
// restart suffix) and may erase part of the legitimately measured time.
enum class LossRule {
    // Paper-calibrated: with probability 3/64 the stop lands on a prescaler
    // wrap and erases a false delay of 61, 62 or 63 cycles; expected extra
    // per byte = 5 - 186/64 ~ 2.09 cycles (paper measures 2.07).
    Delay616263,
    // Every stop discards the uniform sub-count in [0, 63].
    UniformSubcount,
};

struct AttackConfig {
    enum class Kind { Honest, StopStart, Hideout } kind = Kind::Honest;
    LossRule loss_rule = LossRule::Delay616263;
    // Hideout: compression plan for the device image and the malicious bytes
    // parked in the freed filler space.
    shards::CompressionPlan plan;
    Bytes payload;
};

struct DeviceConfig {
    bmac::CostModel cost;
    AttackConfig attack;
    double cycle_noise_sigma = 0.0;  // optional Gaussian timing noise, off by default
    uint64_t rng_seed = 1;
};

inline constexpr uint32_t kStopPrefixCycles = 2;
inline constexpr uint32_t kStartSuffixCycles = 3;

// Measured-cycle delta of one stop event: 5 - loss, loss <= 63.
inline int64_t stop_event_delta(LossRule rule, std::mt19937_64& rng) {
    const int64_t inserted = kStopPrefixCycles + kStartSuffixCycles;
    if (rule == LossRule::Delay616263) {
        uint64_t u = rng() % 64;
        int64_t loss = (u >= 61) ? static_cast<int64_t>(u) : 0;
        return inserted - loss;
    }
    return inserted - static_cast<int64_t>(rng() % 64);
}

class SimDevice {
public:
    SimDevice(bmac::MemoryImage image, DeviceConfig config)
        : image_(std::move(image)), config_(std::move(config)), rng_(config_.rng_seed) {
        if (config_.attack.kind == AttackConfig::Kind::Hideout)
            attested_image_ = hideout_image();
    }

    // Device side of one attestation exchange.
    Bytes handle_frame(std::span<const uint8_t> frame) {
        Message msg;
        try {
            msg = decode(frame);
        } catch (const FramingError&) {
            return encode(ProtocolError{kErrMalformed});
        }
        const auto* req = std::get_if<AttestRequest>(&msg);
        if (!req) return encode(ProtocolError{kErrMalformed});
        return encode(AttestResponse{respond(*req).code});
    }

    struct Attestation {
        bmac::AuthCode code{};
        uint64_t cycles = 0;
        int64_t extra_cycles = 0;  // stop&start: total measured delta
    };

    Attestation respond(const AttestRequest& req) {
        const bmac::MemoryImage& img =
            config_.attack.kind == AttackConfig::Kind::Hideout ? attested_image_ : image_;
        bmac::BmacResult result = bmac::bmac_compute(img, req.seed, req.alg, config_.cost);
        int64_t extra = 0;
        if (config_.attack.kind == AttackConfig::Kind::StopStart) {
            for (size_t i = 0; i < img.size(); ++i)
                extra += stop_event_delta(config_.attack.loss_rule, rng_);
        }
        int64_t cycles = static_cast<int64_t>(result.cycles) + extra;
        if (config_.cycle_noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, config_.cycle_noise_sigma);
            cycles += std::llround(noise(rng_));
        }
        if (cycles < 0) cycles = 0;
        bmac::BmacResult timed = result;
        timed.cycles = static_cast<uint64_t>(cycles);
        prescaler_subcount_ = static_cast<uint8_t>(timed.cycles % bmac::kTimerPrescale);
        return {bmac::auth_code(timed), timed.cycles, extra};
    }

    uint8_t prescaler_subcount() const { return prescaler_subcount_; }
    const bmac::MemoryImage& image() const { return image_; }

private:
    bmac::MemoryImage hideout_image() const {
        Bytes rewritten = shards::apply_compression(image_.linear(), config_.attack.plan);
        auto filler = shards::filler_positions(config_.attack.plan);
        if (config_.attack.payload.size() > filler.size())
            throw std::invalid_argument("hideout payload does not fit in freed space");
        for (size_t i = 0; i < config_.attack.payload.size(); ++i)
            rewritten[filler[i]] = config_.attack.payload[i];
        return image_.with_linear(std::move(rewritten));
    }

    bmac::MemoryImage image_;
    bmac::MemoryImage attested_image_;
    DeviceConfig config_;
    std::mt19937_64 rng_;
    uint8_t prescaler_subcount_ = 0;
};

struct VerifierPolicy {
    uint32_t tick_slack = 0;  // accept codes within +-slack ticks; 0 = exact
};

struct CheckResult {
    bool accept = false;
    bmac::AuthCode expected{};
    std::string diagnostic;
};

class Verifier {
public:
    Verifier(bmac::MemoryImage reference, bmac::CostModel cost, VerifierPolicy policy = {})
        : reference_(std::move(reference)), cost_(cost), policy_(policy) {}

    CheckResult check(uint32_t seed, bmac::HashAlg alg, bmac::AuthCode reported) const {
        bmac::BmacResult expected = bmac::bmac_compute(reference_, seed, alg, cost_);
        bmac::AuthCode want = bmac::auth_code(expected);
        if (want == reported) return {true, want, "accept"};
        for (uint32_t k = 1; k <= policy_.tick_slack; ++k) {
            for (int sign : {-1, 1}) {
                bmac::BmacResult shifted = expected;
                int64_t c = static_cast<int64_t>(expected.cycles) +
                            sign * static_cast<int64_t>(k) * static_cast<int64_t>(bmac::kTimerPrescale);
                if (c < 0) continue;
                shifted.cycles = static_cast<uint64_t>(c);
                if (bmac::auth_code(shifted) == reported)
                    return {true, want, "accept within tick slack"};
            }
        }
        return {false, want, "code mismatch (content/timing not attributable through XOR)"};
    }

    const bmac::MemoryImage& reference() const { return reference_; }

private:
    bmac::MemoryImage reference_;
    bmac::CostModel cost_;
    VerifierPolicy policy_;
};

struct Transcript {
    std::vector<Bytes> frames;  // in exchange order
    bool accepted = false;
    std::string verdict;

    std::string to_hex_lines() const {
        std::string out;
        for (const Bytes& f : frames) {
            out += to_hex(f);
            out += '\n';
        }
        return out;
    }
};

// One request/response exchange over the in-process channel. The optional
// tamper hook edits (or drops, by returning nullopt) the response frame in
// flight.
inline Transcript run_session(SimDevice& device, const Verifier& verifier, uint32_t seed,
                              bmac::HashAlg alg = bmac::HashAlg::Sha256,
                              const std::function<std::optional<Bytes>(Bytes)>& tamper = nullptr) {
    Transcript t;
    Bytes request = encode(AttestRequest{seed, alg});
    t.frames.push_back(request);
    Bytes response = device.handle_frame(request);
    if (tamper) {
        auto edited = tamper(std::move(response));
        if (!edited) {
            t.verdict = "timeout: no response frame";
            return t;
        }
        response = std::move(*edited);
    }
    t.frames.push_back(response);
    Message msg;
    try {
        msg = decode(response);
    } catch (const FramingError& e) {
        t.verdict = std::string("framing error: ") + e.what();
        return t;
    }
    if (const auto* resp = std::get_if<AttestResponse>(&msg)) {
        CheckResult check = verifier.check(seed, alg, resp->code);
        t.accepted = check.accept;
        t.verdict = check.diagnostic;
    } else if (const auto* err = std::get_if<ProtocolError>(&msg)) {
        t.verdict = "device protocol error " + std::to_string(err->reason);
    } else {
        t.verdict = "unexpected message type";
    }
    return t;
}

struct StopStartStats {
    uint64_t trials = 0;
    double mean_extra_cycles_per_byte = 0.0;
    double detection_rate = 0.0;
};

// Monte-Carlo run of the stop&start attack at image size m: reports the mean
// measured extra cycles per byte and how often the 16-bit code mismatches.
inline StopStartStats stop_start_experiment(size_t m, uint64_t trials,
                                            LossRule rule = LossRule::Delay616263,
                                            const bmac::CostModel& cost = {},
                                            uint64_t experiment_seed = 1) {
    if (m < 64) throw std::invalid_argument("stop_start_experiment: m must be >= 64");
    if (trials == 0) throw std::invalid_argument("stop_start_experiment: no trials requested");

    std::mt19937_64 rng(experiment_seed);
    Bytes data(m);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    bmac::MemoryImage image = bmac::MemoryImage::flash(std::move(data));

    double extra_sum = 0.0;
    uint64_t detected = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        uint32_t seed = static_cast<uint32_t>(rng() % (num::MinstdState::modulus - 1)) + 1;
        bmac::BmacResult honest = bmac::bmac_compute(image, seed, bmac::HashAlg::Sha256, cost);
        int64_t extra = 0;
        for (size_t i = 0; i < m; ++i) extra += stop_event_delta(rule, rng);
        bmac::BmacResult attacked = honest;
        int64_t cycles = static_cast<int64_t>(honest.cycles) + extra;
        attacked.cycles = cycles < 0 ? 0 : static_cast<uint64_t>(cycles);
        if (bmac::auth_code(attacked).value != bmac::auth_code(honest).value) ++detected;
        extra_sum += static_cast<double>(extra) / static_cast<double>(m);
    }
    return {trials, extra_sum / static_cast<double>(trials),
            static_cast<double>(detected) / static_cast<double>(trials)};
}

}  // namespace cterm::attest
