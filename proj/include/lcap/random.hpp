#pragma once

#include <cstdint>
#include <random>

namespace lcap {

/// Source of randomness threaded explicitly through every sampler.
using RandomSource = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for sample `index` of a run seeded with `master`.
/// Depends only on (master, index), so results do not depend on scheduling.
inline RandomSource derive_rng(std::uint64_t master, std::uint64_t index) {
    const std::uint64_t a = splitmix64(master);
    const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return RandomSource(seq);
}

} // namespace lcap
