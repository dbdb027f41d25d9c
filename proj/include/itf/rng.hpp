#pragma once

#include <cstdint>
#include <random>

namespace itf {

using Rng = std::mt19937_64;

// Uniform integer in [lo, hi]. Unlike std::uniform_int_distribution the
// sequence is the same on every standard library.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = Rng::max() - Rng::max() % span;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
}

// Uniform real in [0, 1).
inline double uniform_real(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

// Mixes a seed and a stream index into an independent seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace itf
