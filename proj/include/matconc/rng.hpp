#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace matconc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`. Counter-based: the value depends
/// only on (master, stream, index), never on how many other substreams exist
/// or on the order in which they are requested.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index,
                                       std::uint64_t stream = 0) noexcept {
    return mix64(mix64(master ^ mix64(stream + 0x51ED2701ULL)) + index);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t index = 0, std::uint64_t stream = 0) {
    return Rng{substream_seed(master, index, stream)};
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) (Lemire's multiply-shift, negligible bias for n << 2^64).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double rademacher(Rng& rng) {
    return (rng() >> 63) != 0 ? 1.0 : -1.0;
}

/// Standard normal via Box-Muller on uniform01, so draws are bit-reproducible
/// across standard library implementations.
inline double standard_normal(Rng& rng) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace matconc
