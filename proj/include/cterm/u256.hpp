#pragma once

// Fixed-width 256-bit unsigned arithmetic and modular contexts for moduli of
// the form 2^256 - d (both the secp256k1 field prime and group order are).

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cterm/bytes.hpp"

namespace cterm::ec {

struct U256 {
    std::array<uint64_t, 4> w{};  // little-endian limbs

    constexpr bool operator==(const U256&) const = default;

    static constexpr U256 zero() { return {}; }
    static constexpr U256 one() { return U256{{1, 0, 0, 0}}; }

    static U256 from_u64(uint64_t v) { return U256{{v, 0, 0, 0}}; }

    static U256 from_bytes_be(std::span<const uint8_t> bytes) {
        if (bytes.size() != 32) throw std::invalid_argument("U256: need exactly 32 bytes");
        U256 out;
        for (int i = 0; i < 4; ++i) {
            uint64_t limb = 0;
            for (int j = 0; j < 8; ++j) limb = (limb << 8) | bytes[8 * (3 - i) + j];
            out.w[i] = limb;
        }
        return out;
    }

    static U256 from_hex(std::string_view hex) {
        Bytes raw = cterm::from_hex(hex);
        if (raw.size() > 32) throw std::invalid_argument("U256: hex too long");
        Bytes padded(32 - raw.size(), 0);
        padded.insert(padded.end(), raw.begin(), raw.end());
        return from_bytes_be(padded);
    }

    std::array<uint8_t, 32> to_bytes_be() const {
        std::array<uint8_t, 32> out{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 8; ++j)
                out[8 * (3 - i) + j] = static_cast<uint8_t>(w[i] >> (56 - 8 * j));
        return out;
    }

    std::string to_hex() const {
        auto b = to_bytes_be();
        return cterm::to_hex(b);
    }

    bool is_zero() const { return w[0] == 0 && w[1] == 0 && w[2] == 0 && w[3] == 0; }
    bool is_odd() const { return w[0] & 1; }

    bool bit(unsigned i) const { return (w[i / 64] >> (i % 64)) & 1; }

    unsigned bit_width() const {
        for (int i = 3; i >= 0; --i)
            if (w[i]) return 64 * i + std::bit_width(w[i]);
        return 0;
    }

    int compare(const U256& o) const {
        for (int i = 3; i >= 0; --i) {
            if (w[i] < o.w[i]) return -1;
            if (w[i] > o.w[i]) return 1;
        }
        return 0;
    }

    bool operator<(const U256& o) const { return compare(o) < 0; }
    bool operator>=(const U256& o) const { return compare(o) >= 0; }
};

// a + b, carry out
inline uint64_t add_carry(U256& a, const U256& b) {
    unsigned __int128 carry = 0;
    for (int i = 0; i < 4; ++i) {
        unsigned __int128 s = carry + a.w[i] + b.w[i];
        a.w[i] = static_cast<uint64_t>(s);
        carry = s >> 64;
    }
    return static_cast<uint64_t>(carry);
}

// a - b, borrow out
inline uint64_t sub_borrow(U256& a, const U256& b) {
    unsigned __int128 borrow = 0;
    for (int i = 0; i < 4; ++i) {
        unsigned __int128 d = static_cast<unsigned __int128>(a.w[i]) - b.w[i] - borrow;
        a.w[i] = static_cast<uint64_t>(d);
        borrow = (d >> 64) & 1;
    }
    return static_cast<uint64_t>(borrow);
}

struct U512 {
    std::array<uint64_t, 8> w{};

    U256 lo() const { return U256{{w[0], w[1], w[2], w[3]}}; }
    U256 hi() const { return U256{{w[4], w[5], w[6], w[7]}}; }
};

inline U512 mul_wide(const U256& a, const U256& b) {
    U512 out;
    for (int i = 0; i < 4; ++i) {
        unsigned __int128 carry = 0;
        for (int j = 0; j < 4; ++j) {
            unsigned __int128 cur = static_cast<unsigned __int128>(a.w[i]) * b.w[j] +
                                    out.w[i + j] + carry;
            out.w[i + j] = static_cast<uint64_t>(cur);
            carry = cur >> 64;
        }
        out.w[i + 4] = static_cast<uint64_t>(carry);
    }
    return out;
}

// Modular context for a prime modulus m = 2^256 - d. Reduction folds the
// high half via hi*2^256 == hi*d (mod m) until it vanishes.
class Modulus {
public:
    explicit Modulus(const U256& m) : m_(m) {
        U256 zero{};
        d_ = zero;
        sub_borrow(d_, m_);  // 2^256 - m as two's complement
    }

    const U256& value() const { return m_; }

    U256 reduce(U512 t) const {
        U256 lo = t.lo();
        U256 hi = t.hi();
        while (!hi.is_zero()) {
            U512 folded = mul_wide(hi, d_);
            uint64_t carry = add_carry(lo, folded.lo());
            hi = folded.hi();
            if (carry) {
                U256 c = U256::from_u64(carry);
                add_carry(hi, c);
            }
        }
        while (lo >= m_) sub_borrow(lo, m_);
        return lo;
    }

    U256 reduce(const U256& a) const {
        U256 r = a;
        while (r >= m_) sub_borrow(r, m_);
        return r;
    }

    U256 add(const U256& a, const U256& b) const {
        U256 r = a;
        uint64_t carry = add_carry(r, b);
        if (carry || r >= m_) sub_borrow(r, m_);
        return r;
    }

    U256 sub(const U256& a, const U256& b) const {
        U256 r = a;
        if (sub_borrow(r, b)) add_carry(r, m_);
        return r;
    }

    U256 neg(const U256& a) const { return a.is_zero() ? a : sub(U256::zero(), a); }

    U256 mul(const U256& a, const U256& b) const { return reduce(mul_wide(a, b)); }

    U256 sqr(const U256& a) const { return mul(a, a); }

    U256 pow(const U256& base, const U256& exp) const {
        U256 result = U256::one();
        U256 b = base;
        unsigned bits = exp.bit_width();
        for (unsigned i = 0; i < bits; ++i) {
            if (exp.bit(i)) result = mul(result, b);
            b = sqr(b);
        }
        return result;
    }

    // Fermat inverse; m must be prime and a nonzero.
    U256 inv(const U256& a) const {
        if (a.is_zero()) throw std::invalid_argument("Modulus::inv: zero is not invertible");
        U256 e = m_;
        U256 two = U256::from_u64(2);
        sub_borrow(e, two);
        return pow(a, e);
    }

private:
    U256 m_;
    U256 d_;
};

}  // namespace cterm::ec
