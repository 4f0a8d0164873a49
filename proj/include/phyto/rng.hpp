#pragma once

#include <cstdint>
#include <random>

namespace phyto {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds from a root
/// seed and a counter (per tree, per split, per draw).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

/// Uniform double in [0, 1) built from the top 53 bits, so draws are identical
/// across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal via Box-Muller on uniform01 (portable across libstdc++/libc++).
double standard_normal(Rng& rng);

}  // namespace phyto
