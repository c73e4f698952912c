#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream id, counter), so path j sees the same numbers no matter how
// paths are split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace decumulate {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Block operator()(Block ctr) const {
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85;
    std::array<std::uint32_t, 2> key_;
};

/// Sequential view of one substream: counter = (stream id, draw index).
/// Cheap to copy; two streams with the same (seed, id) produce the same draws.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id) : gen_(seed), id_(stream_id) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() {
        if (cached_ == 0) refill();
        const std::uint64_t hi = buf_[4 - cached_];
        const std::uint64_t lo = buf_[5 - cached_];
        cached_ -= 2;
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Pair of independent standard normals (Box-Muller).
    std::array<double, 2> normal_pair() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double normal() { return normal_pair()[0]; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Poisson by CDF inversion; intended for small means (lambda * dt).
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    void refill() {
        buf_ = gen_({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                     static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)});
        ++counter_;
        cached_ = 4;
    }

    Philox4x32 gen_;
    std::uint64_t id_;
    std::uint64_t counter_ = 0;
    Philox4x32::Block buf_{};
    int cached_ = 0;
};

}  // namespace decumulate
