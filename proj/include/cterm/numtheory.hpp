#pragma once

// Number-theoretic core of the attestation permutation: safe-prime groups,
// deterministic generators g_k = p - (2^k mod p), the MINSTD parameter
// derivator, the exponential permutation family F/P, and the classical
// permutation-polynomial criteria the construction is contrasted with.

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cterm::num {

inline uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline uint64_t powmod(uint64_t base, uint64_t exp, uint64_t m) {
    uint64_t result = 1 % m;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base, m);
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    return result;
}

// Deterministic Miller-Rabin, exact for all n < 2^64.
inline bool is_prime(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    uint64_t d = n - 1;
    int r = std::countr_zero(d);
    d >>= r;
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

// p = 2q + 1 with q prime and p == 7 (mod 8). The congruence makes 2 a
// quadratic residue and -2^k a non-residue, so every g_k below has full
// order p - 1.
struct PrimeGroup {
    uint64_t p = 0;
    uint64_t q = 0;

    static bool qualifies(uint64_t p) {
        return p % 8 == 7 && is_prime(p) && is_prime((p - 1) / 2);
    }

    static PrimeGroup from_prime(uint64_t p) {
        if (!qualifies(p)) throw std::invalid_argument("PrimeGroup: p must be a safe prime == 7 mod 8");
        return PrimeGroup{p, (p - 1) / 2};
    }
};

inline constexpr uint64_t kDefaultPrimeSearchSpan = 1u << 22;

inline PrimeGroup find_safe_prime(uint64_t min, uint64_t search_span = kDefaultPrimeSearchSpan) {
    if (min < 2) throw std::invalid_argument("find_safe_prime: min must be >= 2");
    uint64_t start = std::max<uint64_t>(min, 7);
    // first candidate >= start that is 7 mod 8
    uint64_t p = start + ((7 + 8 - start % 8) % 8);
    uint64_t limit = min + search_span;
    for (; p <= limit; p += 8) {
        if (PrimeGroup::qualifies(p)) return PrimeGroup{p, (p - 1) / 2};
    }
    throw std::runtime_error("find_safe_prime: no safe prime == 7 mod 8 within search span");
}

// g_k = p - (2^k mod p), k in [1, q-1]; always a generator of (Z/pZ)*.
inline uint64_t generator(const PrimeGroup& g, uint64_t k) {
    if (k < 1 || k > g.q - 1) throw std::invalid_argument("generator: k out of [1, q-1]");
    return g.p - powmod(2, k, g.p);
}

// Park-Miller minimal standard generator: x' = 16807 * x mod (2^31 - 1).
struct MinstdState {
    static constexpr uint64_t modulus = 2147483647;  // 2^31 - 1
    static constexpr uint64_t multiplier = 16807;

    uint64_t x;

    explicit MinstdState(uint64_t seed) : x(seed) {
        if (seed < 1 || seed > modulus - 1)
            throw std::invalid_argument("MinstdState: seed must be in [1, 2^31 - 2]");
    }

    MinstdState next() const { return MinstdState((multiplier * x) % modulus); }

    uint64_t draw() {
        x = (multiplier * x) % modulus;
        return x;
    }
};

struct PermutationParams {
    PrimeGroup group;
    uint64_t g1 = 0;
    uint64_t g2 = 0;
    uint64_t s1 = 0;
    uint32_t seed = 0;
};

// Three successive MINSTD draws select the generator exponents and s1:
//   k1 = 1 + r1 mod (q-1),  k2 = 1 + r2 mod (q-1),  s1 = 1 + r3 mod (p-1).
inline PermutationParams derive_params(uint32_t seed, const PrimeGroup& group) {
    MinstdState rng(seed);
    uint64_t k1 = 1 + rng.draw() % (group.q - 1);
    uint64_t k2 = 1 + rng.draw() % (group.q - 1);
    uint64_t s1 = 1 + rng.draw() % (group.p - 1);
    return PermutationParams{group, generator(group, k1), generator(group, k2), s1, seed};
}

// F(x) = g2^(s1 * g1^x mod p) mod p, a bijection of [1, p-1].
inline uint64_t perm_F(const PermutationParams& params, uint64_t x) {
    const uint64_t p = params.group.p;
    if (x < 1 || x > p - 1) throw std::invalid_argument("perm_F: x out of [1, p-1]");
    uint64_t z = mulmod(params.s1, powmod(params.g1, x, p), p);
    return powmod(params.g2, z, p);
}

// P(y) = F(1 + y) - 1, a bijection of [0, p-2].
inline uint64_t perm_P(const PermutationParams& params, uint64_t y) {
    if (y > params.group.p - 2) throw std::invalid_argument("perm_P: y out of [0, p-2]");
    return perm_F(params, y + 1) - 1;
}

// Incremental evaluation of P(0), P(1), ..., P(p-2).
//
// The exponent z = s1 * g1^(1+y) is maintained by one modular multiply per
// step; g2^z is then assembled from a precomputed square table, one multiply
// per set exponent bit. The multiply/div-step counters feed the attestation
// cycle model: div_steps counts quotient bits of each product's reduction,
// the data-dependent part of a software modular multiply.
class PermWalker {
public:
    explicit PermWalker(const PermutationParams& params)
        : p_(params.group.p), g1_(params.g1), x_(params.s1) {
        nbits_ = std::bit_width(p_);
        squares_.resize(nbits_);
        squares_[0] = params.g2;
        for (unsigned j = 1; j < nbits_; ++j) squares_[j] = mul(squares_[j - 1], squares_[j - 1]);
    }

    // Next value of P, in [0, p-2]. Valid exactly p-1 times.
    uint64_t next() {
        x_ = mul(x_, g1_);
        uint64_t y = 1;
        uint64_t bits = x_;
        for (unsigned j = 0; j < nbits_; ++j) {
            if (bits & 1) y = mul(y, squares_[j]);
            bits >>= 1;
        }
        return y - 1;
    }

    uint64_t steps_total() const { return p_ - 1; }
    uint64_t mul_count() const { return mul_count_; }
    uint64_t div_steps() const { return div_steps_; }

private:
    uint64_t mul(uint64_t a, uint64_t b) {
        unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
        ++mul_count_;
        unsigned prod_bits = (prod >> 64) ? 64 + std::bit_width(static_cast<uint64_t>(prod >> 64))
                                          : std::bit_width(static_cast<uint64_t>(prod));
        if (prod_bits >= nbits_) div_steps_ += prod_bits - nbits_ + 1;
        return static_cast<uint64_t>(prod % p_);
    }

    uint64_t p_;
    uint64_t g1_;
    uint64_t x_;
    unsigned nbits_ = 0;
    std::vector<uint64_t> squares_;
    uint64_t mul_count_ = 0;
    uint64_t div_steps_ = 0;
};

// Emits P(y) for y = 0..p-2 in order, keeping only values < m: a permutation
// of [0, m-1]. Values >= m are skipped (cycle skipping); since P is a
// bijection, exactly m values survive.
inline std::vector<uint64_t> perm_walk(const PermutationParams& params, uint64_t m) {
    const uint64_t p = params.group.p;
    if (m > p - 1) throw std::invalid_argument("perm_walk: m must be <= p-1");
    std::vector<uint64_t> order;
    order.reserve(m);
    PermWalker walker(params);
    for (uint64_t i = 0; i + 1 < p; ++i) {
        uint64_t v = walker.next();
        if (v < m) order.push_back(v);
    }
    return order;
}

// Klimov-Shamir invertible mapping: P(x) = x + (x^2 OR C) mod 2^n.
// Bits 0 and 2 of C must be set for invertibility.
inline uint64_t klimov_shamir_map(uint64_t x, uint64_t C, unsigned n) {
    if (n < 1 || n > 64) throw std::invalid_argument("klimov_shamir_map: n out of [1, 64]");
    uint64_t mask = (n == 64) ? ~0ull : (1ull << n) - 1;
    if ((C & 1) == 0 || (C & 4) == 0)
        throw std::invalid_argument("klimov_shamir_map: C needs bits 0 and 2 set");
    if (x > mask) throw std::invalid_argument("klimov_shamir_map: x out of [0, 2^n - 1]");
    uint64_t sq = (x * x) & mask;  // low n bits of x^2 are exact under wraparound
    return (x + (sq | (C & mask))) & mask;
}

// Rivest's criterion: a0 + a1 x + ... + ad x^d permutes Z/2^w (w >= 2) iff
// a1 is odd, a2+a4+... is even and a3+a5+... is even.
inline bool rivest_is_permutation_poly(const std::vector<uint64_t>& coeffs, unsigned w) {
    if (w < 2) throw std::invalid_argument("rivest_is_permutation_poly: w must be >= 2");
    if (coeffs.empty()) throw std::invalid_argument("rivest_is_permutation_poly: empty coefficients");
    uint64_t a1 = coeffs.size() > 1 ? coeffs[1] : 0;
    uint64_t even_sum = 0, odd_sum = 0;
    for (size_t i = 2; i < coeffs.size(); ++i) {
        if (i % 2 == 0)
            even_sum += coeffs[i];
        else
            odd_sum += coeffs[i];
    }
    return (a1 % 2 == 1) && (even_sum % 2 == 0) && (odd_sum % 2 == 0);
}

// Matthews: 1 + x + ... + x^d permutes F(q), q = p^e, iff d == 1 mod (q(p-1)).
inline bool matthews_degree_ok(uint64_t d, uint64_t p, uint64_t e) {
    if (d < 1 || e < 1 || !is_prime(p)) throw std::invalid_argument("matthews_degree_ok: bad arguments");
    unsigned __int128 q = 1;
    for (uint64_t i = 0; i < e; ++i) q *= p;
    unsigned __int128 modulus = q * (p - 1);
    return static_cast<unsigned __int128>(d) % modulus == 1;
}

}  // namespace cterm::num
