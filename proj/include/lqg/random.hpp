#pragma once

// Counter-based random streams. Every stream is addressed by an
// (experiment seed, stream index) pair, so a job draws the same numbers no
// matter which worker runs it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace lqg {

/// Philox4x32-10 (Salmon et al.). Key = 64-bit seed, counter = 64-bit stream
/// index in the high words and a 64-bit block counter in the low words.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using block_type = std::array<std::uint32_t, 4>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 4) {
            buffer_ = next_block();
            used_ = 0;
        }
        return buffer_[used_++];
    }

    block_type next_block() {
        block_type ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                       static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        ++block_;
        return encrypt(ctr, key_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    static block_type encrypt(block_type ctr, std::array<std::uint32_t, 2> key) {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    block_type buffer_{};
    int used_ = 4;
};

/// Standard normal variates by Box-Muller on Philox output; portable and
/// bit-reproducible across standard libraries.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const auto w = engine_.next_block();
        const std::uint64_t b1 = (static_cast<std::uint64_t>(w[0]) << 32 | w[1]) >> 11;
        const std::uint64_t b2 = (static_cast<std::uint64_t>(w[2]) << 32 | w[3]) >> 11;
        const double u1 = (static_cast<double>(b1) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(b2) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double uniform() { return engine_.uniform(); }
    Philox4x32& engine() { return engine_; }

private:
    Philox4x32 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive child seeds from (seed, tag).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace lqg
