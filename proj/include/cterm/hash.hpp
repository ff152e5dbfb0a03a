#pragma once

// Digest primitives used across the toolkit: SHA-256, SHA-512, RIPEMD-160,
// legacy Keccak-256 (0x01 padding, as used by Ethereum), HMAC and PBKDF2.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string_view>

#include "cterm/bytes.hpp"

namespace cterm {

class Sha256 {
public:
    static constexpr size_t digest_size = 32;
    static constexpr size_t block_size = 64;

    Sha256() { reset(); }

    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buf_len_ = 0;
        total_ = 0;
    }

    void update(std::span<const uint8_t> data) {
        total_ += data.size();
        size_t off = 0;
        if (buf_len_ > 0) {
            size_t take = std::min(block_size - buf_len_, data.size());
            std::memcpy(buf_.data() + buf_len_, data.data(), take);
            buf_len_ += take;
            off = take;
            if (buf_len_ == block_size) {
                compress(buf_.data());
                buf_len_ = 0;
            }
        }
        while (off + block_size <= data.size()) {
            compress(data.data() + off);
            off += block_size;
        }
        if (off < data.size()) {
            buf_len_ = data.size() - off;
            std::memcpy(buf_.data(), data.data() + off, buf_len_);
        }
    }

    void update(std::string_view s) {
        update(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    }

    std::array<uint8_t, digest_size> finalize() {
        uint64_t bits = total_ * 8;
        uint8_t pad = 0x80;
        update(std::span<const uint8_t>(&pad, 1));
        static constexpr uint8_t zeros[block_size] = {};
        size_t rem = (buf_len_ <= 56) ? (56 - buf_len_) : (block_size + 56 - buf_len_);
        update(std::span<const uint8_t>(zeros, rem));
        uint8_t len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        update(std::span<const uint8_t>(len, 8));
        std::array<uint8_t, digest_size> out{};
        for (int i = 0; i < 8; ++i) {
            out[4 * i] = static_cast<uint8_t>(state_[i] >> 24);
            out[4 * i + 1] = static_cast<uint8_t>(state_[i] >> 16);
            out[4 * i + 2] = static_cast<uint8_t>(state_[i] >> 8);
            out[4 * i + 3] = static_cast<uint8_t>(state_[i]);
        }
        reset();
        return out;
    }

private:
    void compress(const uint8_t* block) {
        static constexpr uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (static_cast<uint32_t>(block[4 * i]) << 24) |
                   (static_cast<uint32_t>(block[4 * i + 1]) << 16) |
                   (static_cast<uint32_t>(block[4 * i + 2]) << 8) |
                   static_cast<uint32_t>(block[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = std::rotr(w[i - 15], 7) ^ std::rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = std::rotr(w[i - 2], 17) ^ std::rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
        uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = std::rotr(e, 6) ^ std::rotr(e, 11) ^ std::rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = h + s1 + ch + K[i] + w[i];
            uint32_t s0 = std::rotr(a, 2) ^ std::rotr(a, 13) ^ std::rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        state_[0] += a;
        state_[1] += b;
        state_[2] += c;
        state_[3] += d;
        state_[4] += e;
        state_[5] += f;
        state_[6] += g;
        state_[7] += h;
    }

    std::array<uint32_t, 8> state_{};
    std::array<uint8_t, block_size> buf_{};
    size_t buf_len_ = 0;
    uint64_t total_ = 0;
};

class Sha512 {
public:
    static constexpr size_t digest_size = 64;
    static constexpr size_t block_size = 128;

    Sha512() { reset(); }

    void reset() {
        state_ = {0x6a09e667f3bcc908ull, 0xbb67ae8584caa73bull, 0x3c6ef372fe94f82bull,
                  0xa54ff53a5f1d36f1ull, 0x510e527fade682d1ull, 0x9b05688c2b3e6c1full,
                  0x1f83d9abfb41bd6bull, 0x5be0cd19137e2179ull};
        buf_len_ = 0;
        total_ = 0;
    }

    void update(std::span<const uint8_t> data) {
        total_ += data.size();
        size_t off = 0;
        if (buf_len_ > 0) {
            size_t take = std::min(block_size - buf_len_, data.size());
            std::memcpy(buf_.data() + buf_len_, data.data(), take);
            buf_len_ += take;
            off = take;
            if (buf_len_ == block_size) {
                compress(buf_.data());
                buf_len_ = 0;
            }
        }
        while (off + block_size <= data.size()) {
            compress(data.data() + off);
            off += block_size;
        }
        if (off < data.size()) {
            buf_len_ = data.size() - off;
            std::memcpy(buf_.data(), data.data() + off, buf_len_);
        }
    }

    std::array<uint8_t, digest_size> finalize() {
        uint64_t bits = total_ * 8;  // message lengths < 2^64 bits here
        uint8_t pad = 0x80;
        update(std::span<const uint8_t>(&pad, 1));
        static constexpr uint8_t zeros[block_size] = {};
        size_t rem = (buf_len_ <= 112) ? (112 - buf_len_) : (block_size + 112 - buf_len_);
        update(std::span<const uint8_t>(zeros, rem));
        uint8_t len[16] = {};
        for (int i = 0; i < 8; ++i) len[8 + i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        update(std::span<const uint8_t>(len, 16));
        std::array<uint8_t, digest_size> out{};
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                out[8 * i + j] = static_cast<uint8_t>(state_[i] >> (56 - 8 * j));
        reset();
        return out;
    }

private:
    void compress(const uint8_t* block) {
        static constexpr uint64_t K[80] = {
            0x428a2f98d728ae22ull, 0x7137449123ef65cdull, 0xb5c0fbcfec4d3b2full, 0xe9b5dba58189dbbcull,
            0x3956c25bf348b538ull, 0x59f111f1b605d019ull, 0x923f82a4af194f9bull, 0xab1c5ed5da6d8118ull,
            0xd807aa98a3030242ull, 0x12835b0145706fbeull, 0x243185be4ee4b28cull, 0x550c7dc3d5ffb4e2ull,
            0x72be5d74f27b896full, 0x80deb1fe3b1696b1ull, 0x9bdc06a725c71235ull, 0xc19bf174cf692694ull,
            0xe49b69c19ef14ad2ull, 0xefbe4786384f25e3ull, 0x0fc19dc68b8cd5b5ull, 0x240ca1cc77ac9c65ull,
            0x2de92c6f592b0275ull, 0x4a7484aa6ea6e483ull, 0x5cb0a9dcbd41fbd4ull, 0x76f988da831153b5ull,
            0x983e5152ee66dfabull, 0xa831c66d2db43210ull, 0xb00327c898fb213full, 0xbf597fc7beef0ee4ull,
            0xc6e00bf33da88fc2ull, 0xd5a79147930aa725ull, 0x06ca6351e003826full, 0x142929670a0e6e70ull,
            0x27b70a8546d22ffcull, 0x2e1b21385c26c926ull, 0x4d2c6dfc5ac42aedull, 0x53380d139d95b3dfull,
            0x650a73548baf63deull, 0x766a0abb3c77b2a8ull, 0x81c2c92e47edaee6ull, 0x92722c851482353bull,
            0xa2bfe8a14cf10364ull, 0xa81a664bbc423001ull, 0xc24b8b70d0f89791ull, 0xc76c51a30654be30ull,
            0xd192e819d6ef5218ull, 0xd69906245565a910ull, 0xf40e35855771202aull, 0x106aa07032bbd1b8ull,
            0x19a4c116b8d2d0c8ull, 0x1e376c085141ab53ull, 0x2748774cdf8eeb99ull, 0x34b0bcb5e19b48a8ull,
            0x391c0cb3c5c95a63ull, 0x4ed8aa4ae3418acbull, 0x5b9cca4f7763e373ull, 0x682e6ff3d6b2b8a3ull,
            0x748f82ee5defb2fcull, 0x78a5636f43172f60ull, 0x84c87814a1f0ab72ull, 0x8cc702081a6439ecull,
            0x90befffa23631e28ull, 0xa4506cebde82bde9ull, 0xbef9a3f7b2c67915ull, 0xc67178f2e372532bull,
            0xca273eceea26619cull, 0xd186b8c721c0c207ull, 0xeada7dd6cde0eb1eull, 0xf57d4f7fee6ed178ull,
            0x06f067aa72176fbaull, 0x0a637dc5a2c898a6ull, 0x113f9804bef90daeull, 0x1b710b35131c471bull,
            0x28db77f523047d84ull, 0x32caab7b40c72493ull, 0x3c9ebe0a15c9bebcull, 0x431d67c49c100d4cull,
            0x4cc5d4becb3e42b6ull, 0x597f299cfc657e2aull, 0x5fcb6fab3ad6faecull, 0x6c44198c4a475817ull};
        uint64_t w[80];
        for (int i = 0; i < 16; ++i) {
            w[i] = 0;
            for (int j = 0; j < 8; ++j) w[i] = (w[i] << 8) | block[8 * i + j];
        }
        for (int i = 16; i < 80; ++i) {
            uint64_t s0 = std::rotr(w[i - 15], 1) ^ std::rotr(w[i - 15], 8) ^ (w[i - 15] >> 7);
            uint64_t s1 = std::rotr(w[i - 2], 19) ^ std::rotr(w[i - 2], 61) ^ (w[i - 2] >> 6);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint64_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
        uint64_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];
        for (int i = 0; i < 80; ++i) {
            uint64_t s1 = std::rotr(e, 14) ^ std::rotr(e, 18) ^ std::rotr(e, 41);
            uint64_t ch = (e & f) ^ (~e & g);
            uint64_t t1 = h + s1 + ch + K[i] + w[i];
            uint64_t s0 = std::rotr(a, 28) ^ std::rotr(a, 34) ^ std::rotr(a, 39);
            uint64_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint64_t t2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        state_[0] += a;
        state_[1] += b;
        state_[2] += c;
        state_[3] += d;
        state_[4] += e;
        state_[5] += f;
        state_[6] += g;
        state_[7] += h;
    }

    std::array<uint64_t, 8> state_{};
    std::array<uint8_t, block_size> buf_{};
    size_t buf_len_ = 0;
    uint64_t total_ = 0;
};

// Original Keccak-256 (pre-NIST padding byte 0x01), rate 136.
class Keccak256 {
public:
    static constexpr size_t digest_size = 32;
    static constexpr size_t rate = 136;

    Keccak256() { reset(); }

    void reset() {
        state_.fill(0);
        pos_ = 0;
    }

    void update(std::span<const uint8_t> data) {
        for (uint8_t b : data) {
            state_bytes()[pos_++] ^= b;
            if (pos_ == rate) {
                permute();
                pos_ = 0;
            }
        }
    }

    std::array<uint8_t, digest_size> finalize() {
        state_bytes()[pos_] ^= 0x01;
        state_bytes()[rate - 1] ^= 0x80;
        permute();
        std::array<uint8_t, digest_size> out{};
        std::memcpy(out.data(), state_bytes(), digest_size);
        reset();
        return out;
    }

private:
    uint8_t* state_bytes() { return reinterpret_cast<uint8_t*>(state_.data()); }

    void permute() {
        static constexpr uint64_t RC[24] = {
            0x0000000000000001ull, 0x0000000000008082ull, 0x800000000000808aull,
            0x8000000080008000ull, 0x000000000000808bull, 0x0000000080000001ull,
            0x8000000080008081ull, 0x8000000000008009ull, 0x000000000000008aull,
            0x0000000000000088ull, 0x0000000080008009ull, 0x000000008000000aull,
            0x000000008000808bull, 0x800000000000008bull, 0x8000000000008089ull,
            0x8000000000008003ull, 0x8000000000008002ull, 0x8000000000000080ull,
            0x000000000000800aull, 0x800000008000000aull, 0x8000000080008081ull,
            0x8000000000008080ull, 0x0000000080000001ull, 0x8000000080008008ull};
        static constexpr int ROT[24] = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                        27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};
        static constexpr int PI[24] = {10, 7,  11, 17, 18, 3, 5,  16, 8,  21, 24, 4,
                                       15, 23, 19, 13, 12, 2, 20, 14, 22, 9,  6,  1};
        auto& s = state_;
        for (int round = 0; round < 24; ++round) {
            uint64_t bc[5];
            for (int i = 0; i < 5; ++i) bc[i] = s[i] ^ s[i + 5] ^ s[i + 10] ^ s[i + 15] ^ s[i + 20];
            for (int i = 0; i < 5; ++i) {
                uint64_t t = bc[(i + 4) % 5] ^ std::rotl(bc[(i + 1) % 5], 1);
                for (int j = 0; j < 25; j += 5) s[j + i] ^= t;
            }
            uint64_t t = s[1];
            for (int i = 0; i < 24; ++i) {
                int j = PI[i];
                uint64_t v = s[j];
                s[j] = std::rotl(t, ROT[i]);
                t = v;
            }
            for (int j = 0; j < 25; j += 5) {
                uint64_t row[5];
                for (int i = 0; i < 5; ++i) row[i] = s[j + i];
                for (int i = 0; i < 5; ++i) s[j + i] ^= (~row[(i + 1) % 5]) & row[(i + 2) % 5];
            }
            s[0] ^= RC[round];
        }
    }

    std::array<uint64_t, 25> state_{};  // little-endian lane layout
    size_t pos_ = 0;
};

class Ripemd160 {
public:
    static constexpr size_t digest_size = 20;
    static constexpr size_t block_size = 64;

    Ripemd160() { reset(); }

    void reset() {
        state_ = {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u, 0xc3d2e1f0u};
        buf_len_ = 0;
        total_ = 0;
    }

    void update(std::span<const uint8_t> data) {
        total_ += data.size();
        size_t off = 0;
        if (buf_len_ > 0) {
            size_t take = std::min(block_size - buf_len_, data.size());
            std::memcpy(buf_.data() + buf_len_, data.data(), take);
            buf_len_ += take;
            off = take;
            if (buf_len_ == block_size) {
                compress(buf_.data());
                buf_len_ = 0;
            }
        }
        while (off + block_size <= data.size()) {
            compress(data.data() + off);
            off += block_size;
        }
        if (off < data.size()) {
            buf_len_ = data.size() - off;
            std::memcpy(buf_.data(), data.data() + off, buf_len_);
        }
    }

    std::array<uint8_t, digest_size> finalize() {
        uint64_t bits = total_ * 8;
        uint8_t pad = 0x80;
        update(std::span<const uint8_t>(&pad, 1));
        static constexpr uint8_t zeros[block_size] = {};
        size_t rem = (buf_len_ <= 56) ? (56 - buf_len_) : (block_size + 56 - buf_len_);
        update(std::span<const uint8_t>(zeros, rem));
        uint8_t len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<uint8_t>(bits >> (8 * i));
        update(std::span<const uint8_t>(len, 8));
        std::array<uint8_t, digest_size> out{};
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 4; ++j)
                out[4 * i + j] = static_cast<uint8_t>(state_[i] >> (8 * j));
        reset();
        return out;
    }

private:
    void compress(const uint8_t* block) {
        static constexpr uint8_t R1[80] = {
            0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 7, 4, 13, 1, 10, 6, 15, 3, 12,
            0, 9, 5, 2, 14, 11, 8, 3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12, 1, 9,
            11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2, 4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3,
            8, 11, 6, 15, 13};
        static constexpr uint8_t R2[80] = {
            5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12, 6, 11, 3, 7, 0, 13, 5, 10, 14,
            15, 8, 12, 4, 9, 1, 2, 15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13, 8, 6,
            4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14, 12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13,
            14, 0, 3, 9, 11};
        static constexpr uint8_t S1[80] = {
            11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8, 7, 6, 8, 13, 11, 9, 7, 15, 7,
            12, 15, 9, 11, 7, 13, 12, 11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5, 11, 12,
            14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12, 9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13,
            14, 11, 8, 5, 6};
        static constexpr uint8_t S2[80] = {
            8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6, 9, 13, 15, 7, 12, 8, 9, 11, 7,
            7, 12, 7, 6, 15, 13, 11, 9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5, 15, 5,
            8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8, 8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6,
            5, 15, 13, 11, 11};
        static constexpr uint32_t K1[5] = {0x00000000u, 0x5a827999u, 0x6ed9eba1u, 0x8f1bbcdcu,
                                           0xa953fd4eu};
        static constexpr uint32_t K2[5] = {0x50a28be6u, 0x5c4dd124u, 0x6d703ef3u, 0x7a6d76e9u,
                                           0x00000000u};
        auto f = [](int j, uint32_t x, uint32_t y, uint32_t z) -> uint32_t {
            if (j < 16) return x ^ y ^ z;
            if (j < 32) return (x & y) | (~x & z);
            if (j < 48) return (x | ~y) ^ z;
            if (j < 64) return (x & z) | (y & ~z);
            return x ^ (y | ~z);
        };
        uint32_t X[16];
        for (int i = 0; i < 16; ++i) {
            X[i] = static_cast<uint32_t>(block[4 * i]) | (static_cast<uint32_t>(block[4 * i + 1]) << 8) |
                   (static_cast<uint32_t>(block[4 * i + 2]) << 16) |
                   (static_cast<uint32_t>(block[4 * i + 3]) << 24);
        }
        uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3], e = state_[4];
        uint32_t A = a, B = b, C = c, D = d, E = e;
        for (int j = 0; j < 80; ++j) {
            uint32_t t = std::rotl(a + f(j, b, c, d) + X[R1[j]] + K1[j / 16], S1[j]) + e;
            a = e;
            e = d;
            d = std::rotl(c, 10);
            c = b;
            b = t;
            t = std::rotl(A + f(79 - j, B, C, D) + X[R2[j]] + K2[j / 16], S2[j]) + E;
            A = E;
            E = D;
            D = std::rotl(C, 10);
            C = B;
            B = t;
        }
        uint32_t t = state_[1] + c + D;
        state_[1] = state_[2] + d + E;
        state_[2] = state_[3] + e + A;
        state_[3] = state_[4] + a + B;
        state_[4] = state_[0] + b + C;
        state_[0] = t;
    }

    std::array<uint32_t, 5> state_{};
    std::array<uint8_t, block_size> buf_{};
    size_t buf_len_ = 0;
    uint64_t total_ = 0;
};

template <typename H>
std::array<uint8_t, H::digest_size> digest(std::span<const uint8_t> data) {
    H h;
    h.update(data);
    return h.finalize();
}

inline std::array<uint8_t, 32> sha256(std::span<const uint8_t> d) { return digest<Sha256>(d); }
inline std::array<uint8_t, 64> sha512(std::span<const uint8_t> d) { return digest<Sha512>(d); }
inline std::array<uint8_t, 32> keccak256(std::span<const uint8_t> d) { return digest<Keccak256>(d); }
inline std::array<uint8_t, 20> ripemd160(std::span<const uint8_t> d) { return digest<Ripemd160>(d); }

template <typename H>
std::array<uint8_t, H::digest_size> hmac(std::span<const uint8_t> key, std::span<const uint8_t> msg) {
    std::array<uint8_t, H::block_size> k{};
    if (key.size() > H::block_size) {
        auto kd = digest<H>(key);
        std::memcpy(k.data(), kd.data(), kd.size());
    } else {
        std::memcpy(k.data(), key.data(), key.size());
    }
    std::array<uint8_t, H::block_size> ipad{}, opad{};
    for (size_t i = 0; i < H::block_size; ++i) {
        ipad[i] = k[i] ^ 0x36;
        opad[i] = k[i] ^ 0x5c;
    }
    H inner;
    inner.update(std::span<const uint8_t>(ipad));
    inner.update(msg);
    auto id = inner.finalize();
    H outer;
    outer.update(std::span<const uint8_t>(opad));
    outer.update(std::span<const uint8_t>(id));
    return outer.finalize();
}

inline std::array<uint8_t, 32> hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> msg) {
    return hmac<Sha256>(key, msg);
}

inline std::array<uint8_t, 64> hmac_sha512(std::span<const uint8_t> key, std::span<const uint8_t> msg) {
    return hmac<Sha512>(key, msg);
}

// PBKDF2-HMAC-SHA512 (RFC 2898), fixed 64-byte output.
inline std::array<uint8_t, 64> pbkdf2_hmac_sha512(std::span<const uint8_t> password,
                                                  std::span<const uint8_t> salt,
                                                  uint32_t iterations) {
    if (iterations == 0) throw std::invalid_argument("pbkdf2: iterations must be >= 1");
    Bytes block(salt.begin(), salt.end());
    put_be32(block, 1);
    auto u = hmac_sha512(password, block);
    auto out = u;
    for (uint32_t i = 1; i < iterations; ++i) {
        u = hmac_sha512(password, u);
        for (size_t j = 0; j < out.size(); ++j) out[j] ^= u[j];
    }
    return out;
}

}  // namespace cterm
