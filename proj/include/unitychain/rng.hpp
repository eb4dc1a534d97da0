#pragma once

#include <cstdint>
#include <vector>

#include "unitychain/hash.hpp"

namespace unitychain {

/// SplitMix64. Used everywhere a seeded deterministic stream is needed so
/// that outputs are stable across standard libraries and platforms.
class SplitMix64 {
 public:
  constexpr explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, bound). bound must be nonzero. The modulo bias is
  /// below 2^-60 for the bounds used here.
  constexpr std::uint64_t next_below(std::uint64_t bound) {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

/// Big-endian u64 from the first 8 bytes of a digest.
constexpr std::uint64_t seed_from_digest(const Digest32& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return v;
}

/// In-place Fisher-Yates shuffle driven by the given generator.
template <typename T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace unitychain
