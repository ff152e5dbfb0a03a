#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cterm/ec.hpp"
#include "cterm/wallet.hpp"

using namespace cterm;
using ec::U256;

namespace {

U256 random_scalar(std::mt19937_64& rng) {
    std::array<uint8_t, 32> b{};
    for (auto& x : b) x = static_cast<uint8_t>(rng());
    U256 v = ec::Fn().reduce(U256::from_bytes_be(b));
    if (v.is_zero()) v = U256::one();
    return v;
}

}  // namespace

TEST_CASE("U256 basics") {
    U256 a = U256::from_hex("00000000000000000000000000000000000000000000000000000000deadbeef");
    CHECK(a.w[0] == 0xdeadbeefull);
    CHECK(a.to_hex() == "00000000000000000000000000000000000000000000000000000000deadbeef");
    CHECK(U256::from_bytes_be(a.to_bytes_be()) == a);

    U256 max{};
    max.w = {~0ull, ~0ull, ~0ull, ~0ull};
    U256 one = U256::one();
    U256 sum = max;
    CHECK(ec::add_carry(sum, one) == 1);
    CHECK(sum.is_zero());

    U256 z{};
    CHECK(ec::sub_borrow(z, one) == 1);
    CHECK(z.w[0] == ~0ull);

    CHECK(a.bit_width() == 32);
    CHECK(U256::zero().bit_width() == 0);
}

TEST_CASE("modular context identities") {
    const ec::Modulus& F = ec::Fp();
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        U256 a = random_scalar(rng);
        // Fermat: a^(p-1) = 1
        U256 e = ec::field_prime();
        ec::sub_borrow(e, U256::one());
        CHECK(F.pow(F.reduce(a), e) == U256::one());
        // a * a^-1 = 1
        CHECK(F.mul(a, F.inv(a)) == U256::one());
        // add/sub inverses
        U256 b = random_scalar(rng);
        CHECK(F.sub(F.add(a, b), b) == F.reduce(a));
    }
    // (p-1)^2 = 1 mod p
    U256 pm1 = ec::field_prime();
    ec::sub_borrow(pm1, U256::one());
    CHECK(F.mul(pm1, pm1) == U256::one());
}

TEST_CASE("mul_wide agrees with native 128-bit products") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        uint64_t a = rng(), b = rng();
        auto wide = ec::mul_wide(U256::from_u64(a), U256::from_u64(b));
        unsigned __int128 ref = static_cast<unsigned __int128>(a) * b;
        CHECK(wide.w[0] == static_cast<uint64_t>(ref));
        CHECK(wide.w[1] == static_cast<uint64_t>(ref >> 64));
        CHECK(wide.w[2] == 0);
    }
}

TEST_CASE("generator is on the curve; n*G is infinity") {
    CHECK(ec::on_curve(ec::generator()));
    CHECK(ec::scalar_mul_double_add(ec::group_order(), ec::generator()).infinity);
    CHECK(ec::base_mul(ec::group_order()).infinity);

    // (n-1)*G = -G
    U256 nm1 = ec::group_order();
    ec::sub_borrow(nm1, U256::one());
    auto p = ec::base_mul(nm1);
    CHECK(p == ec::point_negate(ec::generator()));
}

TEST_CASE("three scalar multiplication routes agree") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 60; ++t) {
        U256 k = random_scalar(rng);
        auto a = ec::scalar_mul_double_add(k, ec::generator());
        auto b = ec::scalar_mul_ladder(k, ec::generator());
        auto c = ec::base_mul(k);
        CHECK(a == b);
        CHECK(a == c);
        CHECK(ec::on_curve(a));
    }
    // and on a non-generator base point
    auto q = ec::base_mul(U256::from_u64(123456789));
    for (int t = 0; t < 20; ++t) {
        U256 k = random_scalar(rng);
        CHECK(ec::scalar_mul_double_add(k, q) == ec::scalar_mul_ladder(k, q));
    }
}

TEST_CASE("point addition laws") {
    auto g = ec::generator();
    auto g2 = ec::point_double(g);
    CHECK(ec::point_add(g, g) == g2);
    CHECK(ec::point_add(g2, ec::point_negate(g)) == g);
    CHECK(ec::point_add(g, ec::point_negate(g)).infinity);
    CHECK(ec::point_add(g, ec::AffinePoint::at_infinity()) == g);
    // 3G via two routes
    CHECK(ec::point_add(g2, g) == ec::base_mul(U256::from_u64(3)));
}

TEST_CASE("point serialization round trips") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 30; ++t) {
        auto p = ec::base_mul(random_scalar(rng));
        CHECK(ec::parse_point(ec::serialize_compressed(p)) == p);
        CHECK(ec::parse_point(ec::serialize_uncompressed(p)) == p);
    }
    CHECK_THROWS_AS(ec::parse_point(Bytes{0x05, 0x01}), std::invalid_argument);
    // x not on curve: x = 0 gives rhs = 7, a quadratic non-residue
    Bytes bad{0x02};
    for (int i = 0; i < 32; ++i) bad.push_back(0);
    CHECK_THROWS_AS(ec::parse_point(bad), std::invalid_argument);
}

TEST_CASE("hash160 of the generator matches the published digest") {
    auto h = wallet::hash160(ec::serialize_compressed(ec::generator()));
    CHECK(to_hex(h) == "751e76e8199196d454941c45d1b3a323f1433bd6");
    auto hu = wallet::hash160(ec::serialize_uncompressed(ec::generator()));
    CHECK(to_hex(hu) == "91b24bf9f5288532960ac687abb035127b1d28a5");
}
