#pragma once

// Portable draws on top of std::mt19937_64. The standard distributions are
// implementation-defined, so the few we need are written out here to keep
// runs bit-identical across toolchains.

#include <cmath>
#include <cstdint>
#include <random>

namespace edgesim {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream index.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return splitmix64(base ^ splitmix64(stream + 1));
}

/// Uniform double in [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

/// Poisson draw by multiplication of uniforms. Large means are split into
/// chunks (sum of Poissons is Poisson) so exp(-mean) never underflows.
inline int poisson(Rng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    constexpr double kChunk = 16.0;
    int total = 0;
    while (mean > 0.0) {
        const double m = mean > kChunk ? kChunk : mean;
        mean -= m;
        const double limit = std::exp(-m);
        double p = uniform01(rng);
        int k = 0;
        while (p > limit) {
            ++k;
            p *= uniform01(rng);
        }
        total += k;
    }
    return total;
}

}  // namespace edgesim
