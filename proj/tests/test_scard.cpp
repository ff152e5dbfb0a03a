#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cterm/secure_element.hpp"

using namespace cterm;

namespace {

struct Setup {
    std::mt19937_64 rng{12345};
    scard::CertificationAuthority ca;
    scard::SecureElement element;
    scard::Terminal terminal;

    Setup()
        : ca(scard::CertificationAuthority::generate(rng)),
          element(scard::SecureElement::provision(ca, rng)),
          terminal(ca.pub) {}
};

bool contains(std::span<const uint8_t> haystack, std::span<const uint8_t> needle) {
    if (needle.empty() || haystack.size() < needle.size()) return false;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i)
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) return true;
    return false;
}

}  // namespace

TEST_CASE("provisioning binds the certificate to the device key") {
    Setup s;
    CHECK(scard::verify_message(s.ca.pub, ec::serialize_compressed(s.element.device_public()),
                                s.element.certificate()));

    // distinct devices get distinct keys
    std::set<std::string> pubs;
    for (int i = 0; i < 100; ++i) {
        auto el = scard::SecureElement::provision(s.ca, s.rng);
        pubs.insert(to_hex(ec::serialize_compressed(el.device_public())));
    }
    CHECK(pubs.size() == 100);

    // altering one byte of the public key breaks verification
    Bytes pub = ec::serialize_compressed(s.element.device_public());
    pub[7] ^= 0x01;
    CHECK_FALSE(scard::verify_message(s.ca.pub, pub, s.element.certificate()));
}

TEST_CASE("card authentication: genuine accepted, both clone models rejected") {
    Setup s;
    auto genuine = s.terminal.authenticate_card(s.element, s.rng);
    CHECK(genuine.accept);
    CHECK(genuine.failed_step == 0);

    scard::OwnKeyClone own_key(s.rng);
    auto own = s.terminal.authenticate_card(own_key, s.rng);
    CHECK_FALSE(own.accept);
    CHECK(own.failed_step == 3);  // certificate does not chain to the CA

    // replay clone: harvested public artifacts plus one recorded signature
    std::array<uint8_t, 32> old_rnd{};
    old_rnd[0] = 0xaa;
    auto recorded = s.element.challenge_sign(old_rnd);
    scard::ReplayClone replay(s.element.device_public(), s.element.certificate(), recorded);
    for (int t = 0; t < 100; ++t) {
        auto res = s.terminal.authenticate_card(replay, s.rng);
        CHECK_FALSE(res.accept);
        CHECK(res.failed_step == 4);  // fresh challenge cannot be answered
    }
}

TEST_CASE("pin verification, retry counters and blocking") {
    Setup s;
    CHECK(s.element.mode() == scard::Mode::Locked);
    CHECK(s.element.pin_verify("1234", scard::Mode::User) == scard::Mode::User);
    CHECK(s.element.pin_verify("12345678", scard::Mode::Admin) == scard::Mode::Admin);
    s.element.lock();
    CHECK(s.element.mode() == scard::Mode::Locked);

    CHECK_THROWS(s.element.pin_verify("0000", scard::Mode::Admin));
    CHECK_THROWS(s.element.pin_verify("0000", scard::Mode::Admin));
    CHECK_FALSE(s.element.blocked());
    CHECK_THROWS(s.element.pin_verify("0000", scard::Mode::Admin));
    CHECK(s.element.blocked());
    // blocked element rejects even the correct PIN
    CHECK_THROWS(s.element.pin_verify("12345678", scard::Mode::Admin));

    // correct PIN resets the counter
    Setup t;
    CHECK_THROWS(t.element.pin_verify("9999", scard::Mode::User));
    CHECK_THROWS(t.element.pin_verify("9999", scard::Mode::User));
    CHECK(t.element.pin_verify("1234", scard::Mode::User) == scard::Mode::User);
    CHECK_THROWS(t.element.pin_verify("9999", scard::Mode::User));
    CHECK_THROWS(t.element.pin_verify("9999", scard::Mode::User));
    CHECK_FALSE(t.element.blocked());
}

TEST_CASE("mode matrix is enforced for every operation") {
    std::array<uint8_t, 32> digest{};
    digest[0] = 1;

    struct Case {
        const char* name;
        scard::Mode minimum;
        std::function<void(scard::SecureElement&, std::mt19937_64&)> run;
    };
    const std::vector<Case> ops = {
        {"self_attest", scard::Mode::User,
         [&](scard::SecureElement& el, std::mt19937_64&) { el.self_attest(digest); }},
        {"get_public", scard::Mode::User,
         [&](scard::SecureElement& el, std::mt19937_64&) { el.get_public(1); }},
        {"sign_hash", scard::Mode::User,
         [&](scard::SecureElement& el, std::mt19937_64&) { el.sign_hash(1, digest); }},
        {"generate_key", scard::Mode::Admin,
         [&](scard::SecureElement& el, std::mt19937_64& rng) { el.generate_key(2, rng); }},
        {"change_pin", scard::Mode::Admin,
         [&](scard::SecureElement& el, std::mt19937_64&) { el.change_pin(scard::Mode::User, "4321"); }},
        {"set_attribute", scard::Mode::Admin,
         [&](scard::SecureElement& el, std::mt19937_64&) { el.set_attribute(1, 0x01, {0x42}); }},
    };

    for (const auto& op : ops) {
        for (scard::Mode mode : {scard::Mode::Locked, scard::Mode::User, scard::Mode::Admin}) {
            Setup s;
            s.element.pin_verify("12345678", scard::Mode::Admin);
            s.element.generate_key(1, s.rng);  // slot for the read ops
            s.element.lock();
            if (mode == scard::Mode::User) s.element.pin_verify("1234", scard::Mode::User);
            if (mode == scard::Mode::Admin) s.element.pin_verify("12345678", scard::Mode::Admin);
            bool allowed = static_cast<int>(mode) >= static_cast<int>(op.minimum);
            if (allowed) {
                CHECK_NOTHROW(op.run(s.element, s.rng));
            } else {
                CHECK_THROWS_WITH(op.run(s.element, s.rng),
                                  Catch::Matchers::ContainsSubstring("authorization error"));
            }
        }
    }
}

TEST_CASE("keystore: generate in admin, sign in user, verify externally") {
    Setup s;
    s.element.pin_verify("12345678", scard::Mode::Admin);
    s.element.generate_key(3, s.rng);
    s.element.lock();
    s.element.pin_verify("1234", scard::Mode::User);

    auto pub = s.element.get_public(3);
    std::array<uint8_t, 32> digest = sha256(Bytes{1, 2, 3});
    auto sig = s.element.sign_hash(3, digest);
    CHECK(wallet::ecdsa_verify(pub, ec::U256::from_bytes_be(digest), sig));

    // deterministic nonce: identical (slot, hash) gives identical signature
    auto sig2 = s.element.sign_hash(3, digest);
    CHECK(sig.r == sig2.r);
    CHECK(sig.s == sig2.s);

    CHECK_THROWS_AS(s.element.get_public(9), std::out_of_range);
}

TEST_CASE("content self-attestation") {
    Setup s;
    s.element.pin_verify("12345678", scard::Mode::Admin);
    s.element.generate_key(1, s.rng);

    std::array<uint8_t, 32> rnd1{}, rnd2{};
    rnd1[0] = 1;
    rnd2[0] = 2;
    auto att1 = s.element.self_attest(rnd1);
    auto att2 = s.element.self_attest(rnd2);
    // content-determined hash, nonce-dependent signature
    CHECK(att1.hash == att2.hash);
    CHECK_FALSE(att1.signature.r == att2.signature.r);

    // terminal verification and nonce cache
    Bytes response(att1.hash.begin(), att1.hash.end());
    Bytes sig = scard::signature_bytes(att1.signature);
    response.insert(response.end(), sig.begin(), sig.end());
    auto out = s.terminal.verify_attestation(response, rnd1, s.element.device_public());
    CHECK(out.accept);
    CHECK(out.displayed_hash == att1.hash);
    auto replayed = s.terminal.verify_attestation(response, rnd1, s.element.device_public());
    CHECK_FALSE(replayed.accept);
    CHECK(replayed.note.find("stale nonce") != std::string::npos);

    // adding a key slot changes the hash
    auto before = s.element.content_hash();
    s.element.generate_key(2, s.rng);
    CHECK_FALSE(s.element.content_hash() == before);

    // a signature from a different key fails
    auto rogue = scard::SecureElement::provision(s.ca, s.rng);
    std::array<uint8_t, 32> rnd3{};
    rnd3[0] = 3;
    auto out3 = s.terminal.verify_attestation(response, rnd3, rogue.device_public());
    CHECK_FALSE(out3.accept);

    // attestation hash covers public content only and is order-canonical:
    // attribute insertion order does not matter
    Setup a, b;
    a.element.pin_verify("12345678", scard::Mode::Admin);
    b.element.pin_verify("12345678", scard::Mode::Admin);
    std::mt19937_64 shared(777);
    a.element.generate_key(1, shared);
    std::mt19937_64 shared2(777);
    b.element.generate_key(1, shared2);
    a.element.set_attribute(1, 0x01, {0x11});
    a.element.set_attribute(1, 0x02, {0x22});
    b.element.set_attribute(1, 0x02, {0x22});
    b.element.set_attribute(1, 0x01, {0x11});
    CHECK(a.element.content_hash() == b.element.content_hash());
}

TEST_CASE("apdu transport status words") {
    Setup s;
    std::mt19937_64 key_rng(5);
    s.element.attach_rng(&key_rng);

    auto send = [&](Bytes frame) { return scard::Terminal::split_response(s.element.transmit(frame)); };

    // unknown INS
    CHECK(send({scard::kClaCterm, 0xee, 0, 0}).second == scard::kSwUnknownIns);
    // wrong length
    CHECK(send({scard::kClaCterm}).second == scard::kSwWrongLength);
    // VERIFY with the wrong PIN reports tries left 0x63C2
    auto wrong = send({scard::kClaCterm, scard::kInsVerifyPin, 0x01, 0x00, 4, '9', '9', '9', '9'});
    CHECK(wrong.second == (scard::kSwWrongPinBase | 2));
    // GET PUBLIC in locked mode
    CHECK(send({scard::kClaCterm, scard::kInsGetPublic, 1, 0}).second == scard::kSwSecurityStatus);
    // device identity is readable while locked
    CHECK(send({scard::kClaCterm, scard::kInsGetDevicePub, 0, 0}).second == scard::kSwOk);

    // unlock, generate, read, sign through the transport
    auto pin = Bytes{scard::kClaCterm, scard::kInsVerifyPin, 0x02, 0x00, 8};
    for (char c : std::string("12345678")) pin.push_back(static_cast<uint8_t>(c));
    CHECK(send(pin).second == scard::kSwOk);
    CHECK(send({scard::kClaCterm, scard::kInsGenerateKey, 7, 0}).second == scard::kSwOk);
    auto pub = send({scard::kClaCterm, scard::kInsGetPublic, 7, 0});
    CHECK(pub.second == scard::kSwOk);
    CHECK(pub.first.size() == 33);
    CHECK(send({scard::kClaCterm, scard::kInsGetPublic, 8, 0}).second == scard::kSwSlotNotFound);

    Bytes sign_frame{scard::kClaCterm, scard::kInsSignHash, 7, 0, 32};
    sign_frame.resize(sign_frame.size() + 32, 0x5a);
    auto sig = send(sign_frame);
    CHECK(sig.second == scard::kSwOk);
    CHECK(sig.first.size() == 64);

    // there is no export-private-key instruction
    for (uint8_t ins = 0; ins < 0xff; ++ins) {
        if (ins == scard::kInsVerifyPin || ins == scard::kInsChangePin || ins == scard::kInsLock ||
            ins == scard::kInsGetDevicePub || ins == scard::kInsGetCertificate ||
            ins == scard::kInsChallenge || ins == scard::kInsSelfAttest ||
            ins == scard::kInsGenerateKey || ins == scard::kInsGetPublic ||
            ins == scard::kInsSignHash)
            continue;
        CHECK(send({scard::kClaCterm, ins, 0, 0}).second == scard::kSwUnknownIns);
    }
}

TEST_CASE("apdu fuzzing never leaks private key bytes") {
    Setup s;
    std::mt19937_64 key_rng(6);
    s.element.attach_rng(&key_rng);
    s.element.pin_verify("12345678", scard::Mode::Admin);
    s.element.generate_key(1, s.rng);
    s.element.generate_key(2, s.rng);

    // collect the secrets that must never appear on the wire
    std::vector<Bytes> secrets;
    {
        auto dump = s.element.insecure_export(true);
        // device priv + slot privs, 64 hex chars each, prefixed by "priv":"
        size_t pos = 0;
        while ((pos = dump.find("priv\":\"", pos)) != std::string::npos) {
            pos += 7;
            secrets.push_back(from_hex(dump.substr(pos, 64)));
        }
    }
    REQUIRE(secrets.size() == 3);
    CHECK_THROWS(s.element.insecure_export(false));

    std::mt19937_64 fuzz(7);
    for (int t = 0; t < 20000; ++t) {
        size_t len = fuzz() % 48;
        Bytes frame(len);
        for (auto& b : frame) b = static_cast<uint8_t>(fuzz());
        if (t % 4 == 0 && len >= 4) frame[0] = scard::kClaCterm;  // bias toward valid CLA
        Bytes response = s.element.transmit(frame);
        for (const Bytes& secret : secrets) REQUIRE_FALSE(contains(response, secret));
    }
}
