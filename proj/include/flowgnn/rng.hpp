#pragma once

#include <cstdint>
#include <random>

namespace flowgnn {

using Rng = std::mt19937_64;

// Sub-seed roles fanned out from one global seed.
enum class SeedRole : std::uint64_t {
  kSplit = 1,
  kAugment = 2,
  kInit = 3,
  kSampling = 4,
  kShuffle = 5,
  kDropout = 6,
  kEvalSampling = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t global, SeedRole role) {
  return splitmix64(global ^ (static_cast<std::uint64_t>(role) * 0x100000001b3ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

}  // namespace flowgnn
