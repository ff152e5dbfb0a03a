#pragma once

// SRAM power-up fingerprint simulator: cell population model, power-up
// waveforms (square, slope&square, two-slope S_y), enrollment into
// always-0/always-1/flipping reference sets, static and dynamic (flipping
// bit) authentication, per-cell threshold sweeps and PPM bitmap export.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "cterm/bytes.hpp"
#include "cterm/hash.hpp"

namespace cterm::puf {

enum class CellClass : uint8_t { Stable0, Stable1, Noisy, Flipping };

struct CellParams {
    CellClass cls = CellClass::Stable0;
    uint8_t fast_value = 0;   // b: content under a high-slope power-up (flipping cells)
    double y_threshold = 0;   // switch voltage as a fraction of VDD (flipping cells)
    double misread_prob = 0;  // per-read misread probability, 1 - exp(-lambda*t)
};

struct PopulationConfig {
    size_t cells = 8192;  // 1KB of SRAM
    double frac_stable0 = 0.46;
    double frac_stable1 = 0.46;
    double frac_noisy = 0.03;
    double frac_flipping = 0.05;
    // Per-read misread probability is lognormal across cells; the median is
    // calibrated so the enrolled stable set shows ~0.1% single-read error.
    double misread_median = 1e-3;
    double misread_sigma = 1.5;  // 0 = homogeneous error rate
    double read_seconds = 2.4;   // 250 reads ~ 10 minutes
    // Flipping thresholds are low-skewed (Beta(2, 50), mode ~ 0.02 VDD): the
    // cells switch well below the slope&square waveform's slope change.
    double yth_alpha = 2.0;
    double yth_beta = 50.0;

    void validate() const {
        double sum = frac_stable0 + frac_stable1 + frac_noisy + frac_flipping;
        if (frac_stable0 < 0 || frac_stable1 < 0 || frac_noisy < 0 || frac_flipping < 0 ||
            sum > 1.0 + 1e-12)
            throw std::invalid_argument("PopulationConfig: fractions must be >= 0 and sum <= 1");
        if (cells == 0) throw std::invalid_argument("PopulationConfig: need at least one cell");
    }
};

struct SramArray {
    std::vector<CellParams> cells;
    uint64_t population_seed = 0;

    size_t size() const { return cells.size(); }

    // Identity of the physical array: digest over the cell parameters.
    std::array<uint8_t, 32> fingerprint() const {
        Sha256 h;
        for (const CellParams& c : cells) {
            uint8_t head[2] = {static_cast<uint8_t>(c.cls), c.fast_value};
            h.update(std::span<const uint8_t>(head, 2));
            auto put_double = [&](double v) {
                uint64_t bits;
                std::memcpy(&bits, &v, 8);
                uint8_t raw[8];
                for (int i = 0; i < 8; ++i) raw[i] = static_cast<uint8_t>(bits >> (8 * i));
                h.update(std::span<const uint8_t>(raw, 8));
            };
            put_double(c.y_threshold);
            put_double(c.misread_prob);
        }
        return h.finalize();
    }
};

inline SramArray sample_population(uint64_t seed, const PopulationConfig& config = {}) {
    config.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::gamma_distribution<double> gamma_a(config.yth_alpha, 1.0);
    std::gamma_distribution<double> gamma_b(config.yth_beta, 1.0);

    SramArray array;
    array.population_seed = seed;
    array.cells.resize(config.cells);
    const double c0 = config.frac_stable0;
    const double c1 = c0 + config.frac_stable1;
    const double c2 = c1 + config.frac_noisy;
    const double c3 = c2 + config.frac_flipping;
    for (CellParams& cell : array.cells) {
        double u = unit(rng);
        if (u < c0)
            cell.cls = CellClass::Stable0;
        else if (u < c1)
            cell.cls = CellClass::Stable1;
        else if (u < c3 && u >= c2)
            cell.cls = CellClass::Flipping;
        else
            cell.cls = CellClass::Noisy;  // noisy band plus any unassigned remainder

        if (cell.cls == CellClass::Flipping) {
            cell.fast_value = static_cast<uint8_t>(rng() & 1);
            double a = gamma_a(rng), b = gamma_b(rng);
            cell.y_threshold = a / (a + b);
        }
        double lam;
        if (config.misread_sigma == 0.0) {
            lam = config.misread_median / config.read_seconds;
        } else {
            std::normal_distribution<double> gauss(0.0, 1.0);
            lam = (config.misread_median / config.read_seconds) *
                  std::exp(config.misread_sigma * gauss(rng));
        }
        cell.misread_prob = 1.0 - std::exp(-lam * config.read_seconds);
    }
    return array;
}

// Power-up waveforms. Slopes are in mV/ms: > 200 is the "high" regime that
// reveals a flipping cell's fast value, < 10 is the "low" regime that shows
// the complement. A two-slope waveform runs the low slope up to switch_y of
// VDD and the high slope after.
struct Waveform {
    enum class Kind : uint8_t { SquareRf, SlopeSquareRs, TwoSlopeSy };

    Kind kind = Kind::SquareRf;
    double switch_y = 0.0;          // S_y switch point
    double low_slope = 625.0 / 512,  // mV/ms, the Fig-15 slope&square ramp
        high_slope = 1e6;

    static Waveform square_rf() { return {Kind::SquareRf, 0.0}; }
    static Waveform slope_square_rs() { return {Kind::SlopeSquareRs, 0.125}; }
    static Waveform two_slope(double y) {
        if (y <= 0.0 || y >= 1.0) throw std::invalid_argument("Waveform: y must be in (0,1)");
        return {Kind::TwoSlopeSy, y};
    }

    // Value a flipping cell takes, before misreads: the slope active at the
    // cell's decision voltage governs.
    uint8_t flipping_value(const CellParams& cell) const {
        bool high_regime;
        switch (kind) {
            case Kind::SquareRf: high_regime = true; break;
            default: high_regime = cell.y_threshold >= switch_y; break;
        }
        return high_regime ? cell.fast_value : static_cast<uint8_t>(1 - cell.fast_value);
    }

    bool operator==(const Waveform& o) const {
        return kind == o.kind && switch_y == o.switch_y;
    }
};

using BitVec = std::vector<uint8_t>;

// One power-up read. Stable cells return their value, flipping cells follow
// the waveform, noisy cells are uniform; every cell independently misreads
// with its per-cell probability.
inline BitVec read(const SramArray& array, const Waveform& waveform, std::mt19937_64& rng) {
    BitVec out(array.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (size_t i = 0; i < array.size(); ++i) {
        const CellParams& c = array.cells[i];
        uint8_t v;
        switch (c.cls) {
            case CellClass::Stable0: v = 0; break;
            case CellClass::Stable1: v = 1; break;
            case CellClass::Noisy: v = static_cast<uint8_t>(rng() & 1); break;
            default: v = waveform.flipping_value(c); break;
        }
        if (c.misread_prob > 0.0 && unit(rng) < c.misread_prob) v = static_cast<uint8_t>(1 - v);
        out[i] = v;
    }
    return out;
}

struct PufReference {
    std::vector<uint32_t> always0;
    std::vector<uint32_t> always1;
    std::vector<uint32_t> flipping;
    BitVec rs_majority;  // slope-reference values, all cells
    BitVec rf_majority;  // square-reference values, all cells
    uint32_t enrollment_reads = 0;
    Waveform waveform;  // base waveform for the always sets
    std::array<uint8_t, 32> population_fingerprint{};
};

inline constexpr double kFlippingConsistency = 0.95;

// N reads with the base waveform fix the always-0/always-1 sets (strict
// constancy); N slope reads and N square reads fix the two majority
// references, and cells whose consistent majorities disagree across the two
// waveforms form the flipping set. The three sets are pairwise disjoint.
inline PufReference enroll(const SramArray& array, const Waveform& base, uint32_t reads_n,
                           std::mt19937_64& rng) {
    if (reads_n == 0) throw std::invalid_argument("enroll: N must be >= 250");
    if (reads_n % 250 != 0) throw std::invalid_argument("enroll: N must be a multiple of 250");

    const size_t n = array.size();
    auto run_pass = [&](const Waveform& w, std::vector<uint32_t>& ones) {
        ones.assign(n, 0);
        for (uint32_t r = 0; r < reads_n; ++r) {
            BitVec bits = read(array, w, rng);
            for (size_t i = 0; i < n; ++i) ones[i] += bits[i];
        }
    };

    std::vector<uint32_t> base_ones, rs_ones, rf_ones;
    run_pass(base, base_ones);
    const Waveform rs = Waveform::slope_square_rs();
    const Waveform rf = Waveform::square_rf();
    if (base == rs) {
        rs_ones = base_ones;
    } else {
        run_pass(rs, rs_ones);
    }
    run_pass(rf, rf_ones);

    PufReference ref;
    ref.enrollment_reads = reads_n;
    ref.waveform = base;
    ref.population_fingerprint = array.fingerprint();
    ref.rs_majority.resize(n);
    ref.rf_majority.resize(n);

    const uint32_t hi = static_cast<uint32_t>(std::ceil(kFlippingConsistency * reads_n));
    const uint32_t lo = reads_n - hi;
    for (size_t i = 0; i < n; ++i) {
        ref.rs_majority[i] = rs_ones[i] * 2 >= reads_n;
        ref.rf_majority[i] = rf_ones[i] * 2 >= reads_n;
        bool rs_consistent = rs_ones[i] >= hi || rs_ones[i] <= lo;
        bool rf_consistent = rf_ones[i] >= hi || rf_ones[i] <= lo;
        if (rs_consistent && rf_consistent && ref.rs_majority[i] != ref.rf_majority[i]) {
            ref.flipping.push_back(static_cast<uint32_t>(i));
        } else if (base_ones[i] == 0) {
            ref.always0.push_back(static_cast<uint32_t>(i));
        } else if (base_ones[i] == reads_n) {
            ref.always1.push_back(static_cast<uint32_t>(i));
        }
    }
    return ref;
}

struct StaticAuthResult {
    uint32_t mismatches = 0;
    uint32_t compared = 0;
    double rate = 0.0;
    bool accept = false;
    bool waveform_mismatch = false;  // read taken with a different waveform than enrolled
};

inline StaticAuthResult static_auth(const BitVec& single_read, const Waveform& read_waveform,
                                    const PufReference& ref, double threshold = 0.01) {
    if (single_read.size() != ref.rs_majority.size())
        throw std::invalid_argument("static_auth: read size does not match reference");
    StaticAuthResult res;
    res.waveform_mismatch = !(read_waveform == ref.waveform);
    auto tally = [&](const std::vector<uint32_t>& set, uint8_t expected) {
        for (uint32_t i : set) {
            ++res.compared;
            if (single_read[i] != expected) ++res.mismatches;
        }
    };
    tally(ref.always0, 0);
    tally(ref.always1, 1);
    res.rate = res.compared ? static_cast<double>(res.mismatches) / res.compared : 0.0;
    res.accept = res.rate <= threshold;
    return res;
}

struct DynamicAuthResult {
    bool accept = false;
    double stable_mismatch_rate = 0.0;  // slope read vs reference, stable cells
    double flip_differ_fraction = 0.0;  // square read vs slope reference, flipping cells
};

// Core decision on a (slope read, square read) pair: the slope read must
// match the reference on the stable sets, and on the flipping set the
// square read must differ from the slope reference in at least theta of the
// positions. A software clone replaying the enrolled fingerprint passes the
// first test and fails the second.
inline DynamicAuthResult dynamic_auth_pair(const BitVec& rs_read, const BitVec& rf_read,
                                           const PufReference& ref, double theta = 0.9,
                                           double static_threshold = 0.01) {
    if (ref.flipping.empty())
        throw std::runtime_error("dynamic_auth: no flipping bits enrolled, dynamic path unavailable");
    DynamicAuthResult res;
    StaticAuthResult stat = static_auth(rs_read, Waveform::slope_square_rs(), ref, static_threshold);
    res.stable_mismatch_rate = stat.rate;
    uint32_t differ = 0;
    for (uint32_t i : ref.flipping)
        if (rf_read[i] != ref.rs_majority[i]) ++differ;
    res.flip_differ_fraction = static_cast<double>(differ) / static_cast<double>(ref.flipping.size());
    res.accept = stat.accept && res.flip_differ_fraction >= theta;
    return res;
}

inline DynamicAuthResult dynamic_auth(const SramArray& array, const PufReference& ref,
                                      std::mt19937_64& rng, double theta = 0.9,
                                      double static_threshold = 0.01) {
    BitVec rs_read = read(array, Waveform::slope_square_rs(), rng);
    BitVec rf_read = read(array, Waveform::square_rf(), rng);
    return dynamic_auth_pair(rs_read, rf_read, ref, theta, static_threshold);
}

struct ThresholdEstimate {
    uint32_t cell = 0;
    double planted = 0.0;                 // the population's y_threshold
    std::optional<double> estimate;       // first grid point past the switch
};

// 25 (by default) S_y reads per grid point per flipping cell; the estimate
// is the first grid y whose majority value is the cell's slow-slope value.
inline std::vector<ThresholdEstimate> threshold_sweep(const SramArray& array,
                                                      std::vector<double> y_grid,
                                                      std::mt19937_64& rng,
                                                      uint32_t reads_per_point = 25) {
    if (y_grid.size() < 3) throw std::invalid_argument("threshold_sweep: grid too coarse (< 3 points)");
    std::sort(y_grid.begin(), y_grid.end());
    if (y_grid.front() <= 0.0 || y_grid.back() >= 1.0)
        throw std::invalid_argument("threshold_sweep: grid must lie in (0,1)");

    std::vector<ThresholdEstimate> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (size_t i = 0; i < array.size(); ++i) {
        const CellParams& c = array.cells[i];
        if (c.cls != CellClass::Flipping) continue;
        ThresholdEstimate est;
        est.cell = static_cast<uint32_t>(i);
        est.planted = c.y_threshold;
        for (double y : y_grid) {
            Waveform w = Waveform::two_slope(y);
            uint32_t ones = 0;
            for (uint32_t r = 0; r < reads_per_point; ++r) {
                uint8_t v = w.flipping_value(c);
                if (unit(rng) < c.misread_prob) v = static_cast<uint8_t>(1 - v);
                ones += v;
            }
            uint8_t majority = ones * 2 >= reads_per_point;
            if (majority == 1 - c.fast_value) {
                est.estimate = y;
                break;
            }
        }
        out.push_back(est);
    }
    return out;
}

struct DecayPoint {
    uint32_t reads_n = 0;
    uint32_t stable0 = 0;
    uint32_t stable1 = 0;
};

// Stable-set sizes after N reads, for Fig-13 style decay curves.
inline std::vector<DecayPoint> decay_curve(const SramArray& array, const Waveform& waveform,
                                           const std::vector<uint32_t>& read_counts,
                                           std::mt19937_64& rng) {
    uint32_t max_n = 0;
    for (uint32_t n : read_counts) max_n = std::max(max_n, n);
    const size_t cells = array.size();
    std::vector<uint32_t> ones(cells, 0);
    std::vector<uint32_t> sorted(read_counts);
    std::sort(sorted.begin(), sorted.end());

    std::vector<DecayPoint> out;
    size_t next = 0;
    for (uint32_t r = 1; r <= max_n && next < sorted.size(); ++r) {
        BitVec bits = read(array, waveform, rng);
        for (size_t i = 0; i < cells; ++i) ones[i] += bits[i];
        while (next < sorted.size() && sorted[next] == r) {
            DecayPoint pt{r, 0, 0};
            for (size_t i = 0; i < cells; ++i) {
                if (ones[i] == 0) ++pt.stable0;
                if (ones[i] == r) ++pt.stable1;
            }
            out.push_back(pt);
            ++next;
        }
    }
    return out;
}

// --- PPM (P6) bitmap export, one pixel per cell, 64 cells per row ---

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kGreen{0, 200, 0};    // always-1
inline constexpr Rgb kYellow{255, 220, 0}; // always-0
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kRed{220, 0, 0};      // flipping or error

inline Bytes render_ppm(const std::vector<Rgb>& pixels, size_t width = 64) {
    size_t height = (pixels.size() + width - 1) / width;
    std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    Bytes out(header.begin(), header.end());
    for (size_t i = 0; i < width * height; ++i) {
        Rgb px = i < pixels.size() ? pixels[i] : kWhite;
        out.push_back(px.r);
        out.push_back(px.g);
        out.push_back(px.b);
    }
    return out;
}

// Fingerprint view of an enrolled reference.
inline Bytes bitmap_reference(const PufReference& ref) {
    std::vector<Rgb> pixels(ref.rs_majority.size(), kWhite);
    for (uint32_t i : ref.always0) pixels[i] = kYellow;
    for (uint32_t i : ref.always1) pixels[i] = kGreen;
    for (uint32_t i : ref.flipping) pixels[i] = kRed;
    return render_ppm(pixels);
}

// Comparison of one read against the reference: mismatches on the stable
// sets in red, matches in the value's colour, other cells white.
inline Bytes bitmap_comparison(const BitVec& single_read, const PufReference& ref) {
    if (single_read.size() != ref.rs_majority.size())
        throw std::invalid_argument("bitmap_comparison: read size does not match reference");
    std::vector<Rgb> pixels(single_read.size(), kWhite);
    for (uint32_t i : ref.always0) pixels[i] = single_read[i] == 0 ? kYellow : kRed;
    for (uint32_t i : ref.always1) pixels[i] = single_read[i] == 1 ? kGreen : kRed;
    return render_ppm(pixels);
}

}  // namespace cterm::puf
