#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fpm::rng {

// Philox4x32-10 counter-based generator. Outputs depend only on
// (counter, key), so any draw can be reproduced or skipped to without
// sequential state. Keys are (seed, stream id); streams never collide
// across purposes because ids are built from the Purpose tag below.

namespace detail {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
        detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += detail::kWeyl0;
        key[1] += detail::kWeyl1;
    }
    return ctr;
}

/// Purpose tags keep independent random streams from ever sharing a key.
enum class Purpose : uint8_t {
    led_init = 1,
    param_init = 2,
    batch_sample = 3,
    train_noise = 4,
    dropout = 5,
    eval_noise = 6,
    mi_noise = 7,
    data_synth = 8,
};

/// Stream id from a purpose tag and up to two 28-bit subindices
/// (iteration, batch element, object index, ...).
inline uint64_t stream_id(Purpose p, uint64_t a = 0, uint64_t b = 0) {
    return (static_cast<uint64_t>(p) << 56) | ((a & 0xFFFFFFFull) << 28) | (b & 0xFFFFFFFull);
}

/// Sequential view over one Philox stream. Cheap to construct; holds a
/// two-double buffer so normals and uniforms cost half a block each.
class Stream {
public:
    Stream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() {
        if (buffered_ == 0) refill();
        return buf_[--buffered_];
    }

    /// Standard normal via Box-Muller on a fresh block.
    double normal() {
        if (normals_ == 0) {
            double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
            double u2 = uniform();
            double r = std::sqrt(-2.0 * std::log(u1));
            double a = 6.283185307179586476925286766559 * u2;
            norm_buf_[0] = r * std::cos(a);
            norm_buf_[1] = r * std::sin(a);
            normals_ = 2;
        }
        return norm_buf_[--normals_];
    }

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) {
        return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    void refill() {
        std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32),
                                       static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
        std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32)};
        auto r = philox4x32(ctr, key);
        ++block_;
        buf_[1] = to_unit(r[0], r[1]);
        buf_[0] = to_unit(r[2], r[3]);
        buffered_ = 2;
    }

    static double to_unit(uint32_t a, uint32_t b) {
        uint64_t bits = (static_cast<uint64_t>(a) << 32) | b;
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    uint64_t seed_;
    uint64_t stream_;
    uint64_t block_ = 0;
    double buf_[2] = {0, 0};
    double norm_buf_[2] = {0, 0};
    int buffered_ = 0;
    int normals_ = 0;
};

/// Truncated normal: N(0, sigma^2) with draws outside [-clip*sigma, clip*sigma]
/// redrawn, matching truncated initializer semantics.
inline double truncated_normal(Stream& s, double sigma, double clip) {
    for (;;) {
        double x = s.normal();
        if (std::fabs(x) <= clip) return x * sigma;
    }
}

}  // namespace fpm::rng
