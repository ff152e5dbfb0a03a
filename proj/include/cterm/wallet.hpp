#pragma once

// Wallet cryptography and the attack catalog: ECDSA over secp256k1,
// duplicate-nonce private-key recovery, duplicate-r dataset scanning, the
// known half-k weak nonce, SPA double-and-add trace recovery, Hash160,
// BIP32 hierarchical derivation, mnemonic seeds and the brainwallet
// dictionary attack.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cterm/bytes.hpp"
#include "cterm/ec.hpp"
#include "cterm/hash.hpp"

namespace cterm::wallet {

using ec::U256;

struct Signature {
    U256 r;
    U256 s;
};

struct RejectedNonce : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// s = k^-1 (e + z*r) mod n, r = (k*G).x mod n. The nonce is explicit: this
// module demonstrates what its misuse costs.
inline Signature ecdsa_sign(const U256& priv, const U256& e, const U256& k) {
    const ec::Modulus& N = ec::Fn();
    if (priv.is_zero() || priv >= ec::group_order())
        throw std::invalid_argument("ecdsa_sign: private key out of [1, n-1]");
    if (k.is_zero() || k >= ec::group_order())
        throw std::invalid_argument("ecdsa_sign: nonce out of [1, n-1]");
    ec::AffinePoint R = ec::base_mul(k);
    U256 r = N.reduce(R.x);
    if (r.is_zero()) throw RejectedNonce("ecdsa_sign: r = 0, redraw nonce");
    U256 s = N.mul(N.inv(k), N.add(N.reduce(e), N.mul(priv, r)));
    if (s.is_zero()) throw RejectedNonce("ecdsa_sign: s = 0, redraw nonce");
    return {r, s};
}

inline bool ecdsa_verify(const ec::AffinePoint& pub, const U256& e, const Signature& sig) {
    const ec::Modulus& N = ec::Fn();
    if (pub.infinity || !ec::on_curve(pub)) return false;
    if (sig.r.is_zero() || sig.r >= ec::group_order()) return false;
    if (sig.s.is_zero() || sig.s >= ec::group_order()) return false;
    U256 w = N.inv(sig.s);
    U256 u1 = N.mul(N.reduce(e), w);
    U256 u2 = N.mul(sig.r, w);
    ec::AffinePoint R = ec::point_add(ec::base_mul(u1), ec::scalar_mul_double_add(u2, pub));
    if (R.infinity) return false;
    return N.reduce(R.x) == sig.r;
}

// RFC 6979 deterministic nonce (HMAC-SHA256 DRBG construction).
inline U256 rfc6979_nonce(const U256& priv, std::span<const uint8_t> digest32) {
    if (digest32.size() != 32) throw std::invalid_argument("rfc6979_nonce: digest must be 32 bytes");
    std::array<uint8_t, 32> V{}, K{};
    V.fill(0x01);
    K.fill(0x00);
    auto x = priv.to_bytes_be();
    // bits2octets for a 256-bit curve: digest reduced mod n
    auto h = ec::Fn().reduce(U256::from_bytes_be(digest32)).to_bytes_be();
    Bytes buf;
    auto feed = [&](uint8_t sep) {
        buf.assign(V.begin(), V.end());
        buf.push_back(sep);
        buf.insert(buf.end(), x.begin(), x.end());
        buf.insert(buf.end(), h.begin(), h.end());
        K = hmac_sha256(K, buf);
        V = hmac_sha256(K, V);
    };
    feed(0x00);
    feed(0x01);
    while (true) {
        V = hmac_sha256(K, V);
        U256 k = U256::from_bytes_be(V);
        if (!k.is_zero() && k < ec::group_order()) return k;
        buf.assign(V.begin(), V.end());
        buf.push_back(0x00);
        K = hmac_sha256(K, buf);
        V = hmac_sha256(K, V);
    }
}

struct SignatureRecord {
    U256 r;
    U256 s;
    U256 e;  // 32-byte message hash as an integer
    std::string key_id;
};

struct RecoveredKey {
    U256 z;
    bool malleation_corrected = false;  // matched only after flipping s2 to n - s2
};

// z = (e1*s2 - e2*s1) * r^-1 * (s1 - s2)^-1 mod n, for two signatures made
// with the same nonce. Both the as-given pair and the s-malleated variant
// (s2 -> n - s2) are derived and validated against the records; the one
// whose implied public key verifies both is returned.
inline RecoveredKey recover_from_duplicate_k(const SignatureRecord& rec1,
                                             const SignatureRecord& rec2) {
    const ec::Modulus& N = ec::Fn();
    if (!(rec1.r == rec2.r))
        throw std::invalid_argument("recover_from_duplicate_k: r values differ, not a duplicate-k pair");
    U256 e1 = N.reduce(rec1.e), e2 = N.reduce(rec2.e);
    if (e1 == e2) throw std::invalid_argument("recover_from_duplicate_k: identical message hashes");

    auto candidate = [&](const U256& s2) -> std::optional<U256> {
        if (rec1.s == s2) return std::nullopt;  // s1 - s2 not invertible
        U256 num = N.sub(N.mul(e1, s2), N.mul(e2, rec1.s));
        U256 z = N.mul(num, N.mul(N.inv(rec1.r), N.inv(N.sub(rec1.s, s2))));
        if (z.is_zero()) return std::nullopt;
        ec::AffinePoint pub = ec::base_mul(z);
        if (ecdsa_verify(pub, rec1.e, {rec1.r, rec1.s}) && ecdsa_verify(pub, rec2.e, {rec2.r, rec2.s}))
            return z;
        return std::nullopt;
    };

    if (auto z = candidate(rec2.s)) return {*z, false};
    if (auto z = candidate(N.neg(rec2.s))) return {*z, true};
    throw std::invalid_argument(
        "recover_from_duplicate_k: degenerate pair (s1 = +-s2 or records inconsistent)");
}

struct DuplicateRGroup {
    U256 r;
    std::vector<size_t> record_indices;  // into the scanned dataset
};

struct DuplicateRScan {
    std::vector<DuplicateRGroup> groups;  // sorted by size descending
    size_t distinct_repeated_r = 0;
    size_t affected_keys = 0;  // distinct key ids across all groups
};

inline DuplicateRScan scan_duplicate_r(const std::vector<SignatureRecord>& records) {
    std::map<std::array<uint8_t, 32>, std::vector<size_t>> by_r;
    for (size_t i = 0; i < records.size(); ++i) by_r[records[i].r.to_bytes_be()].push_back(i);

    DuplicateRScan scan;
    std::set<std::string> keys;
    for (auto& [rbytes, indices] : by_r) {
        if (indices.size() < 2) continue;
        for (size_t i : indices) keys.insert(records[i].key_id);
        scan.groups.push_back({U256::from_bytes_be(rbytes), indices});
    }
    std::sort(scan.groups.begin(), scan.groups.end(), [](const auto& a, const auto& b) {
        if (a.record_indices.size() != b.record_indices.size())
            return a.record_indices.size() > b.record_indices.size();
        return a.record_indices.front() < b.record_indices.front();
    });
    scan.distinct_repeated_r = scan.groups.size();
    scan.affected_keys = keys.size();
    return scan;
}

// The most frequent duplicate nonce observed in the wild is k = 1/2 mod n;
// its r value is a fixed curve constant.
inline const U256& half_k_r_value() {
    static const U256 r = [] {
        U256 k = ec::group_order();  // (n+1)/2 = (n >> 1) + 1 for odd n
        for (int i = 0; i < 3; ++i) k.w[i] = (k.w[i] >> 1) | (k.w[i + 1] << 63);
        k.w[3] >>= 1;
        ec::add_carry(k, U256::one());
        return ec::Fn().reduce(ec::base_mul(k).x);
    }();
    return r;
}

inline std::vector<size_t> flag_half_k(const std::vector<SignatureRecord>& records) {
    std::vector<size_t> hits;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].r == half_k_r_value()) hits.push_back(i);
    return hits;
}

// SPA trace of an unprotected LSB-first double-and-add: 'D' for a doubling
// alone (zero bit), "DA" double-then-add (one bit). Trace length equals the
// scalar bit length, so the trace inverts exactly.
enum class SpaOp : uint8_t { Double, DoubleAdd };

inline std::vector<SpaOp> spa_trace(const U256& z) {
    if (z.is_zero()) throw std::invalid_argument("spa_trace: scalar must be >= 1");
    unsigned bits = z.bit_width();
    std::vector<SpaOp> trace(bits);
    for (unsigned i = 0; i < bits; ++i) trace[i] = z.bit(i) ? SpaOp::DoubleAdd : SpaOp::Double;
    return trace;
}

inline U256 spa_recover(const std::vector<SpaOp>& trace) {
    if (trace.empty()) throw std::invalid_argument("spa_recover: empty trace");
    U256 z{};
    for (size_t i = 0; i < trace.size(); ++i)
        if (trace[i] == SpaOp::DoubleAdd) z.w[i / 64] |= (1ull << (i % 64));
    return z;
}

inline std::string spa_trace_string(const std::vector<SpaOp>& trace) {
    std::string out;
    for (SpaOp op : trace) out += (op == SpaOp::DoubleAdd) ? "DA " : "D ";
    if (!out.empty()) out.pop_back();
    return out;
}

// Hash160 = RIPEMD160(SHA256(data)), the address digest form.
inline std::array<uint8_t, 20> hash160(std::span<const uint8_t> data) {
    if (data.empty()) throw std::invalid_argument("hash160: empty input");
    auto inner = sha256(data);
    return ripemd160(inner);
}

// --- BIP32 hierarchical deterministic derivation ---

inline constexpr uint32_t kHardenedFlag = 0x80000000u;

struct KeyNode {
    uint8_t depth = 0;
    uint32_t index = 0;  // high bit set = hardened
    U256 key;
    std::array<uint8_t, 32> chain_code{};
};

struct ChildKeyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline KeyNode bip32_master(std::span<const uint8_t> seed) {
    if (seed.size() < 16 || seed.size() > 64)
        throw std::invalid_argument("bip32_master: seed must be 16..64 bytes");
    static constexpr char key[] = "Bitcoin seed";
    auto I = hmac_sha512(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(key), 12), seed);
    KeyNode node;
    node.key = U256::from_bytes_be(std::span<const uint8_t>(I).subspan(0, 32));
    std::copy(I.begin() + 32, I.end(), node.chain_code.begin());
    if (node.key.is_zero() || node.key >= ec::group_order())
        throw ChildKeyError("bip32_master: degenerate master key, pick another seed");
    return node;
}

inline KeyNode ckd(const KeyNode& parent, uint32_t index) {
    Bytes data;
    if (index & kHardenedFlag) {
        data.push_back(0x00);
        auto kb = parent.key.to_bytes_be();
        data.insert(data.end(), kb.begin(), kb.end());
    } else {
        Bytes pub = ec::serialize_compressed(ec::base_mul(parent.key));
        data.insert(data.end(), pub.begin(), pub.end());
    }
    put_be32(data, index);
    auto I = hmac_sha512(parent.chain_code, data);
    U256 il = U256::from_bytes_be(std::span<const uint8_t>(I).subspan(0, 32));
    if (il >= ec::group_order()) throw ChildKeyError("ckd: IL >= n, skip this index");
    U256 child = ec::Fn().add(ec::Fn().reduce(il), parent.key);
    if (child.is_zero()) throw ChildKeyError("ckd: derived key is zero, skip this index");
    KeyNode node;
    node.depth = parent.depth + 1;
    node.index = index;
    node.key = child;
    std::copy(I.begin() + 32, I.end(), node.chain_code.begin());
    return node;
}

// Path syntax "m/0'/1/2h": ' or h marks hardened indices.
inline KeyNode derive_path(const KeyNode& master, const std::string& path) {
    if (path.empty() || (path[0] != 'm' && path[0] != 'M'))
        throw std::invalid_argument("derive_path: path must start with m");
    KeyNode node = master;
    size_t pos = 1;
    while (pos < path.size()) {
        if (path[pos] != '/') throw std::invalid_argument("derive_path: expected /");
        ++pos;
        size_t end = path.find('/', pos);
        std::string part = path.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? path.size() : end;
        if (part.empty()) throw std::invalid_argument("derive_path: empty path component");
        uint32_t hardened = 0;
        if (part.back() == '\'' || part.back() == 'h' || part.back() == 'H') {
            hardened = kHardenedFlag;
            part.pop_back();
        }
        node = ckd(node, static_cast<uint32_t>(std::stoul(part)) | hardened);
    }
    return node;
}

// Mnemonic passphrase to 64-byte seed: PBKDF2-HMAC-SHA512, 2048 iterations,
// salt "mnemonic" + user salt.
inline std::array<uint8_t, 64> passphrase_seed(const std::vector<std::string>& words,
                                               const std::string& salt) {
    if (words.empty()) throw std::invalid_argument("passphrase_seed: word list must be non-empty");
    std::string joined;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) joined += ' ';
        joined += words[i];
    }
    std::string full_salt = "mnemonic" + salt;
    return pbkdf2_hmac_sha512(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(joined.data()), joined.size()),
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(full_salt.data()), full_salt.size()),
        2048);
}

// --- brainwallet dictionary attack ---

struct BrainwalletHit {
    std::string phrase;
    std::array<uint8_t, 20> hash160_value{};
    bool compressed = false;
};

struct BrainwalletResult {
    std::vector<BrainwalletHit> hits;
    size_t phrases_tested = 0;
    double seconds = 0.0;
    double phrases_per_second = 0.0;
};

// Brainwallet rule: z = SHA256(phrase); both compressed and uncompressed
// public key digests are matched against the target set.
inline BrainwalletResult brainwallet_attack(const std::vector<std::string>& dictionary,
                                            const std::set<std::array<uint8_t, 20>>& targets) {
    if (dictionary.empty()) throw std::invalid_argument("brainwallet_attack: empty dictionary");
    BrainwalletResult result;
    auto t0 = std::chrono::steady_clock::now();
    for (const std::string& phrase : dictionary) {
        ++result.phrases_tested;
        auto digest = sha256(std::span<const uint8_t>(
            reinterpret_cast<const uint8_t*>(phrase.data()), phrase.size()));
        U256 z = ec::Fn().reduce(U256::from_bytes_be(digest));
        if (z.is_zero()) continue;
        ec::AffinePoint pub = ec::base_mul(z);
        if (!targets.empty()) {
            auto h_unc = hash160(ec::serialize_uncompressed(pub));
            auto h_cmp = hash160(ec::serialize_compressed(pub));
            if (targets.count(h_unc)) result.hits.push_back({phrase, h_unc, false});
            if (targets.count(h_cmp)) result.hits.push_back({phrase, h_cmp, true});
        }
    }
    auto t1 = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.phrases_per_second =
        result.seconds > 0 ? static_cast<double>(result.phrases_tested) / result.seconds : 0.0;
    return result;
}

}  // namespace cterm::wallet
