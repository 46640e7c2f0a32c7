#pragma once

#include <cstdint>

namespace qscat {

// Counter-based uniform stream built on the SplitMix64 finalizer (Steele,
// Lea & Flood's SplittableRandom constants). Each draw is a pure function of
// (seed, index): integer arithmetic only, so streams are reproducible across
// platforms and independent of how particles are sharded across threads.

inline std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t index) {
  return splitmix64_finalize(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

/// Uniform variate in [0, 1) for draw `index` of stream `seed` (top 53 bits).
inline double counter_u01(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(counter_bits(seed, index) >> 11) * 0x1.0p-53;
}

}  // namespace qscat
