/*
 * rng.hpp
 *
 * Small deterministic RNG helpers.  std::mt19937_64 is seeded through
 * splitmix64 so that nearby seeds (and per-agent substreams derived from
 * (seed, agent id)) are decorrelated.  uniform01 avoids
 * std::uniform_real_distribution, whose output is implementation-defined;
 * results must be bit-identical across platforms.
 */
#pragma once

#include <cstdint>
#include <random>

namespace fleeta {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Decorrelated substream seed for (seed, stream index).
inline uint64_t substream_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

inline std::mt19937_64 make_rng(uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// Uniform double in [0, 1) with exactly 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n >= 1, via rejection-free modulo on 64 bits
// (bias is negligible for the small n used here and, more importantly,
// deterministic).
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  return rng() % n;
}

}  // namespace fleeta
