#pragma once

// Bijective MAC over a device memory image: the digest is taken over all
// attested bytes in the seed-determined permutation order, an abstract cycle
// count models the computation time, and the 16-bit authentication code
// combines both (digest tail XOR timer ticks).

#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cterm/bytes.hpp"
#include "cterm/hash.hpp"
#include "cterm/numtheory.hpp"

namespace cterm::bmac {

enum class HashAlg : uint8_t { Sha256 = 0x01, Keccak256 = 0x02 };

inline HashAlg hash_alg_from_name(const std::string& name) {
    if (name == "sha256") return HashAlg::Sha256;
    if (name == "keccak256") return HashAlg::Keccak256;
    throw std::invalid_argument("unknown hash algorithm: " + name);
}

enum class Region : uint8_t { Flash, Sram, Eeprom };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::Flash: return "FLASH";
        case Region::Sram: return "SRAM";
        case Region::Eeprom: return "EEPROM";
    }
    return "?";
}

inline Region region_from_name(const std::string& name) {
    if (name == "FLASH") return Region::Flash;
    if (name == "SRAM") return Region::Sram;
    if (name == "EEPROM") return Region::Eeprom;
    throw std::invalid_argument("unknown region name: " + name);
}

// Ordered set of attested memory regions, addressed as one linear byte
// space A[0..m-1] in declared order.
class MemoryImage {
public:
    MemoryImage() = default;

    explicit MemoryImage(std::vector<std::pair<Region, Bytes>> regions) : regions_(std::move(regions)) {
        bool seen[3] = {false, false, false};
        for (const auto& [kind, data] : regions_) {
            if (seen[static_cast<int>(kind)])
                throw std::invalid_argument("MemoryImage: duplicate region " +
                                            std::string(region_name(kind)));
            seen[static_cast<int>(kind)] = true;
            flat_.insert(flat_.end(), data.begin(), data.end());
        }
        if (flat_.empty()) throw std::invalid_argument("MemoryImage: total size must be >= 1");
    }

    static MemoryImage flash(Bytes data) {
        return MemoryImage({{Region::Flash, std::move(data)}});
    }

    size_t size() const { return flat_.size(); }
    uint8_t operator[](size_t i) const { return flat_[i]; }
    const Bytes& linear() const { return flat_; }
    const std::vector<std::pair<Region, Bytes>>& regions() const { return regions_; }

    MemoryImage with_linear(Bytes replacement) const {
        if (replacement.size() != flat_.size())
            throw std::invalid_argument("MemoryImage: replacement size mismatch");
        std::vector<std::pair<Region, Bytes>> out;
        size_t off = 0;
        for (const auto& [kind, data] : regions_) {
            out.emplace_back(kind, Bytes(replacement.begin() + off, replacement.begin() + off + data.size()));
            off += data.size();
        }
        return MemoryImage(std::move(out));
    }

private:
    std::vector<std::pair<Region, Bytes>> regions_;
    Bytes flat_;
};

// Manifest format: one region per line, "NAME=SIZE", in attestation order.
// Blank lines and '#' comments allowed. Sizes must sum to the binary length.
inline MemoryImage load_image(const Bytes& binary, const std::string& manifest_text) {
    std::vector<std::pair<Region, Bytes>> regions;
    std::istringstream in(manifest_text);
    std::string line;
    size_t off = 0;
    while (std::getline(in, line)) {
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.resize(hash_pos);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("manifest: expected NAME=SIZE: " + line);
        Region kind = region_from_name(line.substr(0, eq));
        size_t size = std::stoull(line.substr(eq + 1));
        if (off + size > binary.size()) throw std::invalid_argument("manifest: sizes exceed binary length");
        regions.emplace_back(kind, Bytes(binary.begin() + off, binary.begin() + off + size));
        off += size;
    }
    if (off != binary.size()) throw std::invalid_argument("manifest: sizes do not cover binary length");
    return MemoryImage(std::move(regions));
}

// Abstract cycle model. cost_mul covers a modular multiplication's fixed
// part; the walker's data-dependent quotient-bit count is added on top,
// which is what makes the total seed-dependent at fixed m. cost_byte covers
// one memory fetch plus hash absorb.
struct CostModel {
    uint64_t cost_mul = 60;
    uint64_t cost_byte = 10;
    uint64_t cost_fixed = 1000;

    void validate() const {
        if (cost_mul < 1 || cost_byte < 1)
            throw std::invalid_argument("CostModel: per-operation costs must be >= 1");
    }
};

inline constexpr uint64_t kTimerPrescale = 64;  // sub-clock N=64

struct BmacResult {
    std::array<uint8_t, 32> digest{};
    uint64_t cycles = 0;

    uint64_t ticks() const { return cycles / kTimerPrescale; }
};

struct AuthCode {
    uint16_t value = 0;

    bool operator==(const AuthCode&) const = default;
};

namespace detail {

class StreamHash {
public:
    explicit StreamHash(HashAlg alg) : alg_(alg) {}

    void absorb(uint8_t b) {
        std::span<const uint8_t> one(&b, 1);
        if (alg_ == HashAlg::Sha256)
            sha_.update(one);
        else
            keccak_.update(one);
    }

    std::array<uint8_t, 32> finalize() {
        return alg_ == HashAlg::Sha256 ? sha_.finalize() : keccak_.finalize();
    }

private:
    HashAlg alg_;
    Sha256 sha_;
    Keccak256 keccak_;
};

}  // namespace detail

// The prime is derived from the image size alone (smallest qualifying safe
// prime > m), so verifier and device agree on it without negotiation.
inline num::PrimeGroup group_for_size(size_t m) { return num::find_safe_prime(m + 1); }

inline BmacResult bmac_compute(const MemoryImage& image, uint32_t seed, HashAlg alg,
                               const CostModel& cost) {
    cost.validate();
    const uint64_t m = image.size();
    num::PrimeGroup group = group_for_size(m);
    num::PermutationParams params = num::derive_params(seed, group);

    detail::StreamHash hash(alg);
    num::PermWalker walker(params);
    uint64_t absorbed = 0;
    for (uint64_t i = 0; i + 1 < group.p; ++i) {
        uint64_t v = walker.next();
        if (v < m) {
            hash.absorb(image[static_cast<size_t>(v)]);
            ++absorbed;
        }
    }

    BmacResult result;
    result.digest = hash.finalize();
    result.cycles = cost.cost_fixed + cost.cost_mul * walker.mul_count() + walker.div_steps() +
                    cost.cost_byte * absorbed;
    return result;
}

// 16-bit code from the two least significant digest bytes (big-endian:
// digest[30] high, digest[31] low) XOR the low 16 bits of the tick count.
inline AuthCode auth_code(const BmacResult& result) {
    uint16_t tail = static_cast<uint16_t>((result.digest[30] << 8) | result.digest[31]);
    return AuthCode{static_cast<uint16_t>(tail ^ (result.ticks() & 0xffff))};
}

// 16 symbols MSB-first, 'L' for 1 and 's' for 0, nibbles separated by '.'.
inline std::string blink_encode(AuthCode code) {
    std::string out;
    out.reserve(19);
    for (int bit = 15; bit >= 0; --bit) {
        out.push_back((code.value >> bit) & 1 ? 'L' : 's');
        if (bit % 4 == 0 && bit != 0) out.push_back('.');
    }
    return out;
}

struct VerifyOutcome {
    bool accept = false;
    AuthCode recomputed{};
    // A code mismatch cannot be attributed to digest vs ticks: the XOR masks
    // which side differs.
    std::string note;
};

inline VerifyOutcome verify(const MemoryImage& reference, uint32_t seed, AuthCode reported,
                            HashAlg alg, const CostModel& cost) {
    BmacResult expected = bmac_compute(reference, seed, alg, cost);
    AuthCode want = auth_code(expected);
    if (want == reported) return {true, want, "code match"};
    return {false, want, "code mismatch (digest/ticks not attributable through XOR)"};
}

}  // namespace cterm::bmac
