#pragma once

// Simulated secure element (keystore applet) and terminal-side verifier:
// CA-certified device keys, anti-cloning challenge/response, content
// self-attestation, two-PIN modes and ECDSA signing behind an ISO7816-style
// APDU surface. Private keys never cross the APDU boundary.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cterm/bytes.hpp"
#include "cterm/ec.hpp"
#include "cterm/hash.hpp"
#include "cterm/wallet.hpp"

namespace cterm::scard {

using ec::U256;

inline U256 random_scalar(std::mt19937_64& rng) {
    while (true) {
        std::array<uint8_t, 32> b{};
        for (auto& x : b) x = static_cast<uint8_t>(rng());
        U256 v = ec::Fn().reduce(U256::from_bytes_be(b));
        if (!v.is_zero()) return v;
    }
}

// ECDSA over SHA256 of the message, deterministic RFC-6979 nonce.
inline wallet::Signature sign_message(const U256& priv, std::span<const uint8_t> message) {
    auto digest = sha256(message);
    U256 e = U256::from_bytes_be(digest);
    return wallet::ecdsa_sign(priv, e, wallet::rfc6979_nonce(priv, digest));
}

inline bool verify_message(const ec::AffinePoint& pub, std::span<const uint8_t> message,
                           const wallet::Signature& sig) {
    auto digest = sha256(message);
    return wallet::ecdsa_verify(pub, U256::from_bytes_be(digest), sig);
}

inline Bytes signature_bytes(const wallet::Signature& sig) {
    Bytes out;
    auto r = sig.r.to_bytes_be();
    auto s = sig.s.to_bytes_be();
    out.insert(out.end(), r.begin(), r.end());
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

inline wallet::Signature signature_from_bytes(std::span<const uint8_t> raw) {
    if (raw.size() != 64) throw std::invalid_argument("signature_from_bytes: need 64 bytes");
    return {U256::from_bytes_be(raw.subspan(0, 32)), U256::from_bytes_be(raw.subspan(32, 32))};
}

struct CertificationAuthority {
    U256 priv;
    ec::AffinePoint pub;

    static CertificationAuthority generate(std::mt19937_64& rng) {
        CertificationAuthority ca;
        ca.priv = random_scalar(rng);
        ca.pub = ec::base_mul(ca.priv);
        return ca;
    }

    // Cert_k = ECDSA_CA(SHA256(Pub_k)) over the compressed device key.
    wallet::Signature certify(const ec::AffinePoint& device_pub) const {
        return sign_message(priv, ec::serialize_compressed(device_pub));
    }
};

enum class Mode : uint8_t { Locked = 0, User = 1, Admin = 2 };

// Status words
inline constexpr uint16_t kSwOk = 0x9000;
inline constexpr uint16_t kSwSecurityStatus = 0x6982;
inline constexpr uint16_t kSwAuthBlocked = 0x6983;
inline constexpr uint16_t kSwWrongLength = 0x6700;
inline constexpr uint16_t kSwUnknownIns = 0x6d00;
inline constexpr uint16_t kSwSlotNotFound = 0x6a82;
inline constexpr uint16_t kSwWrongParams = 0x6a86;
inline constexpr uint16_t kSwWrongPinBase = 0x63c0;  // low nibble = tries left

// Instruction set (CLA 0x80)
inline constexpr uint8_t kClaCterm = 0x80;
inline constexpr uint8_t kInsVerifyPin = 0x20;
inline constexpr uint8_t kInsChangePin = 0x24;
inline constexpr uint8_t kInsLock = 0x04;
inline constexpr uint8_t kInsGetDevicePub = 0xc0;
inline constexpr uint8_t kInsGetCertificate = 0xc2;
inline constexpr uint8_t kInsChallenge = 0xc4;
inline constexpr uint8_t kInsSelfAttest = 0xc6;
inline constexpr uint8_t kInsGenerateKey = 0x46;
inline constexpr uint8_t kInsGetPublic = 0xca;
inline constexpr uint8_t kInsSignHash = 0x2a;

struct ApduResponse {
    Bytes data;
    uint16_t sw = kSwOk;

    Bytes wire() const {
        Bytes out = data;
        out.push_back(static_cast<uint8_t>(sw >> 8));
        out.push_back(static_cast<uint8_t>(sw));
        return out;
    }
};

// Anything that answers APDUs: the genuine element and the clone models.
class CardEndpoint {
public:
    virtual ~CardEndpoint() = default;
    virtual Bytes transmit(std::span<const uint8_t> frame) = 0;
};

struct KeySlot {
    U256 priv;
    ec::AffinePoint pub;
    std::map<uint8_t, Bytes> attributes;  // public TLV attributes
};

inline constexpr int kPinRetryLimit = 3;

class SecureElement : public CardEndpoint {
public:
    static SecureElement provision(const CertificationAuthority& ca, std::mt19937_64& rng) {
        SecureElement el;
        el.priv_ = random_scalar(rng);
        el.pub_ = ec::base_mul(el.priv_);
        el.cert_ = ca.certify(el.pub_);
        return el;
    }

    // --- direct (pre-transport) operations ---

    Mode mode() const { return mode_; }
    bool blocked() const { return blocked_; }
    const ec::AffinePoint& device_public() const { return pub_; }
    const wallet::Signature& certificate() const { return cert_; }

    Mode pin_verify(const std::string& pin, Mode which) {
        if (which != Mode::User && which != Mode::Admin)
            throw std::invalid_argument("pin_verify: which must be user or admin");
        if (blocked_) throw std::runtime_error("element is blocked");
        std::string& expected = which == Mode::Admin ? admin_pin_ : user_pin_;
        int& tries = which == Mode::Admin ? admin_tries_ : user_tries_;
        if (pin == expected) {
            tries = kPinRetryLimit;
            mode_ = which;
            return mode_;
        }
        if (--tries <= 0) blocked_ = true;
        throw std::runtime_error("wrong PIN, " + std::to_string(tries) + " tries left");
    }

    void lock() { mode_ = Mode::Locked; }

    void change_pin(Mode which, const std::string& new_pin) {
        require(Mode::Admin);
        validate_pin(new_pin);
        (which == Mode::Admin ? admin_pin_ : user_pin_) = new_pin;
    }

    wallet::Signature challenge_sign(std::span<const uint8_t> rnd32) const {
        if (rnd32.size() != 32) throw std::invalid_argument("challenge_sign: rnd must be 32 bytes");
        return sign_message(priv_, rnd32);
    }

    // SHA256 over the canonical serialization of the keystore's public
    // content: slots by index, each index || curve id || compressed public
    // key || sorted attribute TLVs.
    std::array<uint8_t, 32> content_hash() const {
        Bytes blob;
        for (const auto& [index, slot] : slots_) {
            blob.push_back(index);
            blob.push_back(0x01);  // curve id: secp256k1
            Bytes pub = ec::serialize_compressed(slot.pub);
            blob.insert(blob.end(), pub.begin(), pub.end());
            for (const auto& [tag, value] : slot.attributes) {
                blob.push_back(tag);
                put_be16(blob, static_cast<uint16_t>(value.size()));
                blob.insert(blob.end(), value.begin(), value.end());
            }
        }
        return sha256(blob);
    }

    struct Attestation {
        std::array<uint8_t, 32> hash{};
        wallet::Signature signature;
    };

    // hash || ECDSA(hash || rnd), only when unlocked.
    Attestation self_attest(std::span<const uint8_t> rnd32) const {
        require(Mode::User);
        if (rnd32.size() != 32) throw std::invalid_argument("self_attest: rnd must be 32 bytes");
        Attestation att;
        att.hash = content_hash();
        Bytes msg(att.hash.begin(), att.hash.end());
        msg.insert(msg.end(), rnd32.begin(), rnd32.end());
        att.signature = sign_message(priv_, msg);
        return att;
    }

    uint8_t generate_key(uint8_t slot_index, std::mt19937_64& rng) {
        require(Mode::Admin);
        KeySlot slot;
        slot.priv = random_scalar(rng);
        slot.pub = ec::base_mul(slot.priv);
        slots_[slot_index] = std::move(slot);
        return slot_index;
    }

    ec::AffinePoint get_public(uint8_t slot_index) const {
        require(Mode::User);
        auto it = slots_.find(slot_index);
        if (it == slots_.end()) throw std::out_of_range("no such key slot");
        return it->second.pub;
    }

    wallet::Signature sign_hash(uint8_t slot_index, std::span<const uint8_t> digest32) const {
        require(Mode::User);
        if (digest32.size() != 32) throw std::invalid_argument("sign_hash: digest must be 32 bytes");
        auto it = slots_.find(slot_index);
        if (it == slots_.end()) throw std::out_of_range("no such key slot");
        U256 e = U256::from_bytes_be(digest32);
        return wallet::ecdsa_sign(it->second.priv, e,
                                  wallet::rfc6979_nonce(it->second.priv, digest32));
    }

    void set_attribute(uint8_t slot_index, uint8_t tag, Bytes value) {
        require(Mode::Admin);
        auto it = slots_.find(slot_index);
        if (it == slots_.end()) throw std::out_of_range("no such key slot");
        it->second.attributes[tag] = std::move(value);
    }

    // Test-only plaintext dump; refuses to run without the explicit flag.
    std::string insecure_export(bool i_accept_plaintext_keys) const {
        if (!i_accept_plaintext_keys)
            throw std::runtime_error("insecure_export requires the explicit acceptance flag");
        std::string out = "{\"device_pub\":\"" + to_hex(ec::serialize_compressed(pub_)) + "\"";
        out += ",\"device_priv\":\"" + priv_.to_hex() + "\"";
        out += ",\"slots\":[";
        bool first = true;
        for (const auto& [index, slot] : slots_) {
            if (!first) out += ",";
            first = false;
            out += "{\"index\":" + std::to_string(index) + ",\"priv\":\"" + slot.priv.to_hex() +
                   "\",\"pub\":\"" + to_hex(ec::serialize_compressed(slot.pub)) + "\"}";
        }
        out += "]}";
        return out;
    }

    // --- APDU transport ---

    Bytes transmit(std::span<const uint8_t> frame) override {
        try {
            return dispatch(frame).wire();
        } catch (const std::exception&) {
            return ApduResponse{{}, kSwWrongParams}.wire();
        }
    }

    // One element processes one APDU at a time; needed by key generation.
    void attach_rng(std::mt19937_64* rng) { rng_ = rng; }

private:
    void require(Mode min) const {
        if (static_cast<uint8_t>(mode_) < static_cast<uint8_t>(min))
            throw std::runtime_error("authorization error: operation not allowed in this mode");
    }

    static void validate_pin(const std::string& pin) {
        if (pin.size() < 4 || pin.size() > 8)
            throw std::invalid_argument("PIN must be 4..8 characters");
    }

    ApduResponse dispatch(std::span<const uint8_t> frame) {
        if (frame.size() < 4) return {{}, kSwWrongLength};
        uint8_t cla = frame[0], ins = frame[1], p1 = frame[2];
        std::span<const uint8_t> data;
        if (frame.size() > 4) {
            uint8_t lc = frame[4];
            if (frame.size() != 5u + lc && frame.size() != 6u + lc) return {{}, kSwWrongLength};
            data = frame.subspan(5, lc);
        }
        if (cla != kClaCterm) return {{}, kSwUnknownIns};

        switch (ins) {
            case kInsVerifyPin: {
                Mode which = p1 == 0x01 ? Mode::User : p1 == 0x02 ? Mode::Admin : Mode::Locked;
                if (which == Mode::Locked) return {{}, kSwWrongParams};
                if (blocked_) return {{}, kSwAuthBlocked};
                std::string pin(data.begin(), data.end());
                std::string& expected = which == Mode::Admin ? admin_pin_ : user_pin_;
                int& tries = which == Mode::Admin ? admin_tries_ : user_tries_;
                if (pin == expected) {
                    tries = kPinRetryLimit;
                    mode_ = which;
                    return {{}, kSwOk};
                }
                if (--tries <= 0) {
                    blocked_ = true;
                    return {{}, kSwAuthBlocked};
                }
                return {{}, static_cast<uint16_t>(kSwWrongPinBase | tries)};
            }
            case kInsChangePin: {
                if (mode_ != Mode::Admin) return {{}, kSwSecurityStatus};
                Mode which = p1 == 0x01 ? Mode::User : p1 == 0x02 ? Mode::Admin : Mode::Locked;
                if (which == Mode::Locked) return {{}, kSwWrongParams};
                if (data.size() < 4 || data.size() > 8) return {{}, kSwWrongLength};
                (which == Mode::Admin ? admin_pin_ : user_pin_) =
                    std::string(data.begin(), data.end());
                return {{}, kSwOk};
            }
            case kInsLock:
                mode_ = Mode::Locked;
                return {{}, kSwOk};
            case kInsGetDevicePub:
                return {ec::serialize_compressed(pub_), kSwOk};
            case kInsGetCertificate:
                return {signature_bytes(cert_), kSwOk};
            case kInsChallenge: {
                if (data.size() != 32) return {{}, kSwWrongLength};
                return {signature_bytes(challenge_sign(data)), kSwOk};
            }
            case kInsSelfAttest: {
                if (mode_ == Mode::Locked) return {{}, kSwSecurityStatus};
                if (data.size() != 32) return {{}, kSwWrongLength};
                auto att = self_attest(data);
                Bytes out(att.hash.begin(), att.hash.end());
                Bytes sig = signature_bytes(att.signature);
                out.insert(out.end(), sig.begin(), sig.end());
                return {out, kSwOk};
            }
            case kInsGenerateKey: {
                if (mode_ != Mode::Admin) return {{}, kSwSecurityStatus};
                if (!rng_) return {{}, kSwWrongParams};
                generate_key(p1, *rng_);
                return {ec::serialize_compressed(slots_[p1].pub), kSwOk};
            }
            case kInsGetPublic: {
                if (mode_ == Mode::Locked) return {{}, kSwSecurityStatus};
                auto it = slots_.find(p1);
                if (it == slots_.end()) return {{}, kSwSlotNotFound};
                return {ec::serialize_compressed(it->second.pub), kSwOk};
            }
            case kInsSignHash: {
                if (mode_ == Mode::Locked) return {{}, kSwSecurityStatus};
                if (data.size() != 32) return {{}, kSwWrongLength};
                auto it = slots_.find(p1);
                if (it == slots_.end()) return {{}, kSwSlotNotFound};
                return {signature_bytes(sign_hash(p1, data)), kSwOk};
            }
            default:
                return {{}, kSwUnknownIns};
        }
    }

    U256 priv_;
    ec::AffinePoint pub_;
    wallet::Signature cert_;
    std::string user_pin_ = "1234";
    std::string admin_pin_ = "12345678";
    int user_tries_ = kPinRetryLimit;
    int admin_tries_ = kPinRetryLimit;
    bool blocked_ = false;
    Mode mode_ = Mode::Locked;
    std::map<uint8_t, KeySlot> slots_;
    std::mt19937_64* rng_ = nullptr;
};

// Clone that generated its own key pair and certificate (no access to the
// real CA): detected when the certificate check fails.
class OwnKeyClone : public CardEndpoint {
public:
    explicit OwnKeyClone(std::mt19937_64& rng) {
        rogue_ca_ = CertificationAuthority::generate(rng);
        priv_ = random_scalar(rng);
        pub_ = ec::base_mul(priv_);
        cert_ = rogue_ca_.certify(pub_);
    }

    Bytes transmit(std::span<const uint8_t> frame) override {
        if (frame.size() < 4) return ApduResponse{{}, kSwWrongLength}.wire();
        switch (frame[1]) {
            case kInsGetDevicePub: return ApduResponse{ec::serialize_compressed(pub_), kSwOk}.wire();
            case kInsGetCertificate: return ApduResponse{signature_bytes(cert_), kSwOk}.wire();
            case kInsChallenge: {
                if (frame.size() < 37) return ApduResponse{{}, kSwWrongLength}.wire();
                auto data = frame.subspan(5, 32);
                return ApduResponse{signature_bytes(sign_message(priv_, data)), kSwOk}.wire();
            }
            default: return ApduResponse{{}, kSwUnknownIns}.wire();
        }
    }

private:
    CertificationAuthority rogue_ca_;
    U256 priv_;
    ec::AffinePoint pub_;
    wallet::Signature cert_;
};

// Clone that replays a genuine card's public artifacts (Pub_k, Cert_k, one
// recorded challenge signature) without the private key: detected when the
// fresh challenge cannot be answered.
class ReplayClone : public CardEndpoint {
public:
    ReplayClone(ec::AffinePoint genuine_pub, wallet::Signature genuine_cert,
                wallet::Signature recorded_challenge_sig)
        : pub_(genuine_pub), cert_(genuine_cert), recorded_(recorded_challenge_sig) {}

    Bytes transmit(std::span<const uint8_t> frame) override {
        if (frame.size() < 4) return ApduResponse{{}, kSwWrongLength}.wire();
        switch (frame[1]) {
            case kInsGetDevicePub: return ApduResponse{ec::serialize_compressed(pub_), kSwOk}.wire();
            case kInsGetCertificate: return ApduResponse{signature_bytes(cert_), kSwOk}.wire();
            case kInsChallenge: return ApduResponse{signature_bytes(recorded_), kSwOk}.wire();
            default: return ApduResponse{{}, kSwUnknownIns}.wire();
        }
    }

private:
    ec::AffinePoint pub_;
    wallet::Signature cert_;
    wallet::Signature recorded_;
};

struct CardAuthOutcome {
    bool accept = false;
    int failed_step = 0;  // 0 = none; 1..4 per the protocol steps
    std::string note;
};

// Terminal side: knows only the CA public key and a nonce cache.
class Terminal {
public:
    explicit Terminal(ec::AffinePoint ca_pub) : ca_pub_(ca_pub) {}

    static Bytes apdu(uint8_t ins, uint8_t p1 = 0, std::span<const uint8_t> data = {}) {
        Bytes frame{kClaCterm, ins, p1, 0x00};
        if (!data.empty()) {
            frame.push_back(static_cast<uint8_t>(data.size()));
            frame.insert(frame.end(), data.begin(), data.end());
        }
        return frame;
    }

    static std::pair<Bytes, uint16_t> split_response(const Bytes& wire) {
        if (wire.size() < 2) throw std::runtime_error("short APDU response");
        uint16_t sw = static_cast<uint16_t>((wire[wire.size() - 2] << 8) | wire.back());
        return {Bytes(wire.begin(), wire.end() - 2), sw};
    }

    // The four-step anti-cloning procedure: read Pub_k, read Cert_k, verify
    // the certificate under the CA key, then prove possession of Priv_k via
    // a fresh 32-byte challenge.
    CardAuthOutcome authenticate_card(CardEndpoint& card, std::mt19937_64& rng) {
        auto [pub_raw, sw1] = split_response(card.transmit(apdu(kInsGetDevicePub)));
        if (sw1 != kSwOk) return {false, 1, "cannot read device public key"};
        ec::AffinePoint pub;
        try {
            pub = ec::parse_point(pub_raw);
        } catch (const std::exception&) {
            return {false, 1, "malformed device public key"};
        }

        auto [cert_raw, sw2] = split_response(card.transmit(apdu(kInsGetCertificate)));
        if (sw2 != kSwOk || cert_raw.size() != 64) return {false, 2, "cannot read certificate"};
        wallet::Signature cert = signature_from_bytes(cert_raw);

        if (!verify_message(ca_pub_, pub_raw, cert))
            return {false, 3, "certificate does not verify under the CA key"};

        std::array<uint8_t, 32> rnd{};
        for (auto& b : rnd) b = static_cast<uint8_t>(rng());
        auto [sig_raw, sw4] = split_response(card.transmit(apdu(kInsChallenge, 0, rnd)));
        if (sw4 != kSwOk || sig_raw.size() != 64) return {false, 4, "challenge not answered"};
        if (!verify_message(pub, rnd, signature_from_bytes(sig_raw)))
            return {false, 4, "challenge signature does not verify"};
        return {true, 0, "genuine"};
    }

    struct AttestationOutcome {
        bool accept = false;
        std::array<uint8_t, 32> displayed_hash{};
        std::string note;
    };

    // Verify hash || ECDSA(hash || rnd); a reused nonce is rejected before
    // any cryptography happens.
    AttestationOutcome verify_attestation(std::span<const uint8_t> response,
                                          std::span<const uint8_t> rnd32,
                                          const ec::AffinePoint& pub) {
        AttestationOutcome out;
        if (rnd32.size() != 32) {
            out.note = "bad nonce size";
            return out;
        }
        std::array<uint8_t, 32> rnd{};
        std::copy(rnd32.begin(), rnd32.end(), rnd.begin());
        if (!used_nonces_.insert(rnd).second) {
            out.note = "stale nonce reuse rejected";
            return out;
        }
        if (response.size() != 96) {
            out.note = "bad attestation response size";
            return out;
        }
        Bytes msg(response.begin(), response.begin() + 32);
        msg.insert(msg.end(), rnd32.begin(), rnd32.end());
        if (!verify_message(pub, msg, signature_from_bytes(response.subspan(32, 64)))) {
            out.note = "attestation signature does not verify";
            return out;
        }
        out.accept = true;
        std::copy(response.begin(), response.begin() + 32, out.displayed_hash.begin());
        out.note = "verified; compare the displayed hash";
        return out;
    }

private:
    ec::AffinePoint ca_pub_;
    std::set<std::array<uint8_t, 32>> used_nonces_;
};

}  // namespace cterm::scard
