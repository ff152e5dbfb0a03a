#pragma once

// secp256k1 group arithmetic. Jacobian coordinates internally, affine at the
// edges. Scalar multiplication is provided by three independent routes --
// LSB-first double-and-add, a Montgomery ladder, and a fixed-base table of
// doublings of G -- so higher layers can cross-check results. Constant-time
// behaviour is deliberately not a goal here.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cterm/bytes.hpp"
#include "cterm/u256.hpp"

namespace cterm::ec {

inline const U256& field_prime() {
    // 2^256 - 2^32 - 977
    static const U256 p = U256::from_hex(
        "ffffffff" "ffffffff" "ffffffff" "ffffffff" "ffffffff" "ffffffff" "fffffffe" "fffffc2f");
    return p;
}

inline const U256& group_order() {
    static const U256 n = U256::from_hex(
        "ffffffff" "ffffffff" "ffffffff" "fffffffe" "baaedce6" "af48a03b" "bfd25e8c" "d0364141");
    return n;
}

inline const Modulus& Fp() {
    static const Modulus m(field_prime());
    return m;
}

inline const Modulus& Fn() {
    static const Modulus m(group_order());
    return m;
}

struct AffinePoint {
    U256 x;
    U256 y;
    bool infinity = true;

    static AffinePoint at_infinity() { return {}; }

    bool operator==(const AffinePoint& o) const {
        if (infinity || o.infinity) return infinity == o.infinity;
        return x == o.x && y == o.y;
    }
};

inline const AffinePoint& generator() {
    static const AffinePoint g = {
        U256::from_hex("79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"),
        U256::from_hex("483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8"),
        false};
    return g;
}

namespace detail {

struct Jacobian {
    U256 X, Y, Z;
    bool infinity = true;

    static Jacobian from_affine(const AffinePoint& p) {
        if (p.infinity) return {};
        return {p.x, p.y, U256::one(), false};
    }
};

inline Jacobian jac_double(const Jacobian& p) {
    if (p.infinity || p.Y.is_zero()) return {};
    const Modulus& F = Fp();
    U256 ysq = F.sqr(p.Y);
    U256 s = F.mul(U256::from_u64(4), F.mul(p.X, ysq));
    U256 m = F.mul(U256::from_u64(3), F.sqr(p.X));  // a = 0 for secp256k1
    U256 x3 = F.sub(F.sqr(m), F.add(s, s));
    U256 y3 = F.sub(F.mul(m, F.sub(s, x3)), F.mul(U256::from_u64(8), F.sqr(ysq)));
    U256 z3 = F.mul(U256::from_u64(2), F.mul(p.Y, p.Z));
    return {x3, y3, z3, false};
}

inline Jacobian jac_add(const Jacobian& p, const Jacobian& q) {
    if (p.infinity) return q;
    if (q.infinity) return p;
    const Modulus& F = Fp();
    U256 z1z1 = F.sqr(p.Z);
    U256 z2z2 = F.sqr(q.Z);
    U256 u1 = F.mul(p.X, z2z2);
    U256 u2 = F.mul(q.X, z1z1);
    U256 s1 = F.mul(p.Y, F.mul(q.Z, z2z2));
    U256 s2 = F.mul(q.Y, F.mul(p.Z, z1z1));
    if (u1 == u2) {
        if (s1 == s2) return jac_double(p);
        return {};  // P + (-P)
    }
    U256 h = F.sub(u2, u1);
    U256 r = F.sub(s2, s1);
    U256 hh = F.sqr(h);
    U256 hhh = F.mul(h, hh);
    U256 v = F.mul(u1, hh);
    U256 x3 = F.sub(F.sub(F.sqr(r), hhh), F.add(v, v));
    U256 y3 = F.sub(F.mul(r, F.sub(v, x3)), F.mul(s1, hhh));
    U256 z3 = F.mul(h, F.mul(p.Z, q.Z));
    return {x3, y3, z3, false};
}

inline AffinePoint to_affine(const Jacobian& p) {
    if (p.infinity) return AffinePoint::at_infinity();
    const Modulus& F = Fp();
    U256 zinv = F.inv(p.Z);
    U256 zinv2 = F.sqr(zinv);
    return {F.mul(p.X, zinv2), F.mul(p.Y, F.mul(zinv, zinv2)), false};
}

}  // namespace detail

inline AffinePoint point_add(const AffinePoint& a, const AffinePoint& b) {
    return detail::to_affine(
        detail::jac_add(detail::Jacobian::from_affine(a), detail::Jacobian::from_affine(b)));
}

inline AffinePoint point_double(const AffinePoint& a) {
    return detail::to_affine(detail::jac_double(detail::Jacobian::from_affine(a)));
}

inline AffinePoint point_negate(const AffinePoint& a) {
    if (a.infinity) return a;
    return {a.x, Fp().neg(a.y), false};
}

// LSB-first double-and-add: k*P = sum of b_i * D_i with D_0 = P and
// D_i = 2*D_{i-1}. One addition per set bit; the SPA model keys off this.
inline AffinePoint scalar_mul_double_add(const U256& k, const AffinePoint& p) {
    detail::Jacobian acc;
    detail::Jacobian d = detail::Jacobian::from_affine(p);
    unsigned bits = k.bit_width();
    for (unsigned i = 0; i < bits; ++i) {
        if (k.bit(i)) acc = detail::jac_add(acc, d);
        d = detail::jac_double(d);
    }
    return detail::to_affine(acc);
}

// Montgomery ladder; the independent route used by oracle cross-checks.
inline AffinePoint scalar_mul_ladder(const U256& k, const AffinePoint& p) {
    detail::Jacobian r0;
    detail::Jacobian r1 = detail::Jacobian::from_affine(p);
    for (int i = 255; i >= 0; --i) {
        if (k.bit(static_cast<unsigned>(i))) {
            r0 = detail::jac_add(r0, r1);
            r1 = detail::jac_double(r1);
        } else {
            r1 = detail::jac_add(r0, r1);
            r0 = detail::jac_double(r0);
        }
    }
    return detail::to_affine(r0);
}

namespace detail {

inline const std::array<Jacobian, 256>& base_doublings() {
    static const std::array<Jacobian, 256> table = [] {
        std::array<Jacobian, 256> t;
        t[0] = Jacobian::from_affine(generator());
        for (int i = 1; i < 256; ++i) t[i] = jac_double(t[i - 1]);
        return t;
    }();
    return table;
}

}  // namespace detail

// Fixed-base multiplication k*G from the precomputed doubling table.
inline AffinePoint base_mul(const U256& k) {
    const auto& table = detail::base_doublings();
    detail::Jacobian acc;
    unsigned bits = k.bit_width();
    for (unsigned i = 0; i < bits; ++i)
        if (k.bit(i)) acc = detail::jac_add(acc, table[i]);
    return detail::to_affine(acc);
}

inline Bytes serialize_compressed(const AffinePoint& p) {
    if (p.infinity) throw std::invalid_argument("serialize_compressed: point at infinity");
    Bytes out;
    out.push_back(p.y.is_odd() ? 0x03 : 0x02);
    auto xb = p.x.to_bytes_be();
    out.insert(out.end(), xb.begin(), xb.end());
    return out;
}

inline Bytes serialize_uncompressed(const AffinePoint& p) {
    if (p.infinity) throw std::invalid_argument("serialize_uncompressed: point at infinity");
    Bytes out;
    out.push_back(0x04);
    auto xb = p.x.to_bytes_be();
    auto yb = p.y.to_bytes_be();
    out.insert(out.end(), xb.begin(), xb.end());
    out.insert(out.end(), yb.begin(), yb.end());
    return out;
}

inline AffinePoint parse_point(std::span<const uint8_t> data) {
    const Modulus& F = Fp();
    if (data.size() == 65 && data[0] == 0x04) {
        AffinePoint p{U256::from_bytes_be(data.subspan(1, 32)), U256::from_bytes_be(data.subspan(33, 32)),
                      false};
        return p;
    }
    if (data.size() == 33 && (data[0] == 0x02 || data[0] == 0x03)) {
        U256 x = U256::from_bytes_be(data.subspan(1, 32));
        // y^2 = x^3 + 7; sqrt via (p+1)/4 since p == 3 mod 4
        U256 rhs = F.add(F.mul(F.sqr(x), x), U256::from_u64(7));
        U256 e = field_prime();
        add_carry(e, U256::one());
        // (p+1)/4: shift right by 2
        U256 exp{};
        for (int i = 0; i < 4; ++i) {
            uint64_t lo = e.w[i] >> 2;
            uint64_t hi = (i < 3) ? (e.w[i + 1] << 62) : 0;
            exp.w[i] = lo | hi;
        }
        U256 y = F.pow(rhs, exp);
        if (F.sqr(y) != F.reduce(rhs)) throw std::invalid_argument("parse_point: x not on curve");
        bool want_odd = data[0] == 0x03;
        if (y.is_odd() != want_odd) y = F.neg(y);
        return {x, y, false};
    }
    throw std::invalid_argument("parse_point: bad encoding");
}

inline bool on_curve(const AffinePoint& p) {
    if (p.infinity) return true;
    const Modulus& F = Fp();
    return F.sqr(p.y) == F.add(F.mul(F.sqr(p.x), p.x), U256::from_u64(7));
}

}  // namespace cterm::ec
