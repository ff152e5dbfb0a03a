#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cterm/bytes.hpp"
#include "cterm/shards.hpp"

using namespace cterm;

namespace {

Bytes ascii(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

// O(n^2) longest-repeated-substring oracle with the same tie rule as the
// tree: maximum length, then smallest first occurrence; occurrence list is
// every position of the winning substring (overlaps allowed).
std::optional<shards::Shard> brute_force_lrs(std::span<const uint8_t> s) {
    const size_t n = s.size();
    size_t best_len = 0, best_i = 0;
    std::vector<uint32_t> prev_row(n + 1, 0), row(n + 1, 0);
    for (size_t i = 0; i + 1 < n; ++i) {
        // row[j] = longest common prefix of s[i..] and s[j..], j > i
        for (size_t j = n; j-- > i + 1;) {
            uint32_t lcp = 0;
            size_t a = i, b = j;
            while (b < n && s[a] == s[b]) {
                ++lcp;
                ++a;
                ++b;
            }
            if (lcp > best_len) {
                best_len = lcp;
                best_i = i;
            }
        }
    }
    if (best_len == 0) return std::nullopt;
    std::vector<uint32_t> occs;
    for (size_t j = 0; j + best_len <= n; ++j) {
        if (std::equal(s.begin() + best_i, s.begin() + best_i + best_len, s.begin() + j))
            occs.push_back(static_cast<uint32_t>(j));
    }
    return shards::Shard{static_cast<uint32_t>(best_len), occs};
}

Bytes random_bytes(size_t n, uint64_t seed, int alphabet = 256) {
    std::mt19937_64 rng(seed);
    Bytes out(n);
    for (auto& b : out) b = static_cast<uint8_t>(rng() % alphabet);
    return out;
}

}  // namespace

TEST_CASE("suffix tree longest repeat basics") {
    auto t1 = shards::SuffixTree::build(ascii("abab"));
    auto r1 = t1.longest_repeat();
    REQUIRE(r1.has_value());
    CHECK(r1->length == 2);
    CHECK(r1->occurrences == std::vector<uint32_t>{0, 2});

    auto t2 = shards::SuffixTree::build(ascii("aaaa"));
    auto r2 = t2.longest_repeat();
    REQUIRE(r2.has_value());
    CHECK(r2->length == 3);  // overlapping occurrences count
    CHECK(r2->occurrences == std::vector<uint32_t>{0, 1});

    auto t3 = shards::SuffixTree::build(ascii("x"));
    CHECK_FALSE(t3.longest_repeat().has_value());

    auto t4 = shards::SuffixTree::build(ascii("abcabc"));
    auto r4 = t4.longest_repeat();
    REQUIRE(r4.has_value());
    CHECK(r4->length == 3);
    CHECK(r4->occurrences == std::vector<uint32_t>{0, 3});

    Bytes distinct;
    for (int i = 0; i < 64; ++i) distinct.push_back(static_cast<uint8_t>(i));
    CHECK_FALSE(shards::SuffixTree::build(distinct).longest_repeat().has_value());
}

TEST_CASE("suffix tree node count bound") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Bytes data = random_bytes(1000, seed, seed % 2 ? 4 : 256);
        auto tree = shards::SuffixTree::build(data);
        CHECK(tree.node_count() <= 2 * tree.text_length());
    }
}

TEST_CASE("longest repeat matches brute force on random inputs") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 60; ++t) {
        int alphabet = (t % 3 == 0) ? 2 : (t % 3 == 1 ? 8 : 256);
        Bytes data = random_bytes(16 + rng() % 512, rng(), alphabet);
        auto got = shards::SuffixTree::build(data).longest_repeat();
        auto want = brute_force_lrs(data);
        REQUIRE(got.has_value() == want.has_value());
        if (want) {
            CHECK(got->length == want->length);
            CHECK(got->occurrences == want->occurrences);
        }
    }
}

TEST_CASE("planted duplicate is recovered with exact offsets") {
    Bytes image = random_bytes(8192, 21);
    Bytes body = random_bytes(64, 22);
    std::copy(body.begin(), body.end(), image.begin() + 1000);
    std::copy(body.begin(), body.end(), image.begin() + 5000);
    auto repeat = shards::SuffixTree::build(image).longest_repeat();
    REQUIRE(repeat.has_value());
    CHECK(repeat->length == 64);
    CHECK(repeat->occurrences == std::vector<uint32_t>{1000, 5000});
}

TEST_CASE("find_shards reports planted shards in discovery order") {
    Bytes image = random_bytes(4096, 31);
    Bytes big = random_bytes(64, 32);
    Bytes small = random_bytes(32, 33);
    std::copy(big.begin(), big.end(), image.begin() + 100);
    std::copy(big.begin(), big.end(), image.begin() + 700);
    std::copy(small.begin(), small.end(), image.begin() + 2000);
    std::copy(small.begin(), small.end(), image.begin() + 3000);

    auto report = shards::find_shards(image, 16);
    REQUIRE(report.shards.size() == 2);
    CHECK(report.shards[0].length == 64);
    CHECK(report.shards[0].occurrences == std::vector<uint32_t>{100, 700});
    CHECK(report.shards[1].length == 32);
    CHECK(report.shards[1].occurrences == std::vector<uint32_t>{2000, 3000});

    CHECK(shards::find_shards(random_bytes(8, 34), 16).shards.empty());
    CHECK_THROWS_AS(shards::find_shards(image, 3), std::invalid_argument);
}

TEST_CASE("find_shards is reproducible for a fixed replacement seed") {
    Bytes image = random_bytes(2048, 41);
    Bytes body = random_bytes(48, 42);
    for (size_t at : {64u, 512u, 1024u}) std::copy(body.begin(), body.end(), image.begin() + at);
    auto a = shards::find_shards(image, 16, {}, 77);
    auto b = shards::find_shards(image, 16, {}, 77);
    REQUIRE(a.shards.size() == b.shards.size());
    for (size_t i = 0; i < a.shards.size(); ++i) CHECK(a.shards[i] == b.shards[i]);
}

TEST_CASE("masked control-flow bytes truncate shards") {
    // Two copies of a 40-byte block; both contain a control-flow instruction
    // at block offset 24 (positional mask). The detected shard must stop
    // short of it.
    Bytes image = random_bytes(1024, 51);
    Bytes body = random_bytes(40, 52);
    const uint32_t at1 = 100, at2 = 400;
    std::copy(body.begin(), body.end(), image.begin() + at1);
    std::copy(body.begin(), body.end(), image.begin() + at2);
    Bytes mask(image.size(), 0);
    mask[at1 + 24] = 1;
    mask[at1 + 25] = 1;
    mask[at2 + 24] = 1;
    mask[at2 + 25] = 1;

    auto report = shards::find_shards(image, 16, mask);
    REQUIRE_FALSE(report.shards.empty());
    const auto& shard = report.shards[0];
    CHECK(shard.length == 24);  // the aligned prefix before the masked bytes
    CHECK(shard.occurrences == std::vector<uint32_t>{at1, at2});
    for (uint32_t occ : shard.occurrences) {
        CHECK(occ % 2 == 0);
        for (uint32_t j = 0; j < shard.length; ++j) CHECK(mask[occ + j] == 0);
    }

    CHECK_THROWS_AS(shards::find_shards(image, 16, Bytes(10, 0)), std::invalid_argument);
}

TEST_CASE("compression plan freed-byte accounting") {
    shards::ShardReport report;
    report.image_size = 4096;
    report.min_len = 8;

    SECTION("c=2, L=64 frees 54") {
        report.shards = {{64, {100, 164}}};
        auto plan = shards::plan_compression(report);
        REQUIRE(plan.shards.size() == 1);
        CHECK(plan.shards[0].freed == 54);
        CHECK(plan.total_freed == 54);
        CHECK(plan.shards[0].subroutine_offset == 104);
        REQUIRE(plan.shards[0].call_sites.size() == 2);
        CHECK(plan.shards[0].call_sites[0].at == 100);
        CHECK(plan.shards[0].call_sites[1].at == 104 + 64 + 2);
    }

    SECTION("c=2, L=8 frees nothing and is dropped") {
        report.shards = {{8, {100, 108}}};
        auto plan = shards::plan_compression(report);
        CHECK(plan.shards.empty());
        REQUIRE(plan.dropped.size() == 1);
        CHECK(plan.dropped[0].freed == -2);
    }

    SECTION("c=3, L=64 frees 114") {
        report.shards = {{64, {100, 164, 1000}}};
        auto plan = shards::plan_compression(report);
        REQUIRE(plan.shards.size() == 1);
        CHECK(plan.shards[0].freed == 114);
    }

    SECTION("overlapping occurrences rejected") {
        report.shards = {{64, {100, 130}}};
        CHECK_THROWS_AS(shards::plan_compression(report), std::invalid_argument);
    }

    SECTION("non-adjacent first occurrences cannot host the subroutine") {
        report.shards = {{64, {100, 600}}};
        auto plan = shards::plan_compression(report);
        CHECK(plan.shards.empty());
        REQUIRE(plan.dropped.size() == 1);
        CHECK(plan.dropped[0].reason == "no contiguous space for subroutine body");
    }
}

TEST_CASE("apply_compression structural checks") {
    // Zero-free image so filler bytes are countable directly.
    Bytes image = random_bytes(1024, 61);
    for (auto& b : image) b = static_cast<uint8_t>(1 + b % 255);
    Bytes body(64);
    for (size_t i = 0; i < body.size(); ++i) body[i] = static_cast<uint8_t>(1 + (i * 7 + 3) % 255);
    const uint32_t at1 = 100, at2 = 164;  // adjacent, Fig-4 style
    std::copy(body.begin(), body.end(), image.begin() + at1);
    std::copy(body.begin(), body.end(), image.begin() + at2);

    auto report = shards::find_shards(image, 16);
    REQUIRE(report.shards.size() == 1);
    auto plan = shards::plan_compression(report);
    REQUIRE(plan.shards.size() == 1);
    auto out = shards::apply_compression(image, plan);

    CHECK(out.size() == image.size());

    // the shard byte string occurs exactly once afterwards
    size_t count = 0;
    for (size_t i = 0; i + body.size() <= out.size(); ++i)
        if (std::equal(body.begin(), body.end(), out.begin() + i)) ++count;
    CHECK(count == 1);
    CHECK(std::equal(body.begin(), body.end(), out.begin() + plan.shards[0].subroutine_offset));

    // call sites present at the planned offsets
    for (const auto& cs : plan.shards[0].call_sites) {
        CHECK(out[cs.at] == shards::kCallOpcode);
        CHECK(out[cs.at + plan.isa.call_size] == shards::kJumpOpcode);
    }

    // freed accounting matches the byte-level view exactly
    auto filler = shards::filler_positions(plan);
    CHECK(static_cast<int64_t>(filler.size()) == plan.total_freed);
    for (uint32_t pos : filler) CHECK(out[pos] == shards::kFiller);
    size_t zeros_before = std::count(image.begin(), image.end(), 0);
    size_t zeros_after = std::count(out.begin(), out.end(), 0);
    CHECK(zeros_before == 0);
    // subroutine offset and continuations have nonzero low bytes here, so
    // every zero in the output is plan filler
    CHECK(static_cast<int64_t>(zeros_after) == plan.total_freed);

    // outside the occurrence regions the image is untouched
    for (size_t i = 0; i < at1; ++i) CHECK(out[i] == image[i]);
    for (size_t i = at2 + 64; i < out.size(); ++i) CHECK(out[i] == image[i]);

    // empty plan leaves the image unchanged
    shards::CompressionPlan empty;
    auto unchanged = shards::apply_compression(image, empty);
    CHECK(unchanged == image);
}
