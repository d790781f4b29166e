#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace fes {

/// All randomness in the toolkit flows through this engine, seeded explicitly.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-experiment seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(mix64(master) ^ mix64(index + 0x5851f42d4c957f2dULL));
}

// The std:: distributions are implementation-defined; these are not, so seeds
// replay identically across standard libraries.

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        auto x = rng();
        if (x >= threshold)
            return x % n;
    }
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

inline bool bernoulli(Rng& rng, double p)
{
    return uniform01(rng) < p;
}

} // namespace fes
