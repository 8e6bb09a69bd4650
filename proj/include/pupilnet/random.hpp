#pragma once

#include <cstdint>

namespace pupilnet {

/// Mixes a base seed with a stream tag (splitmix64 finalizer) so that
/// independent consumers draw from decorrelated generators.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pupilnet
