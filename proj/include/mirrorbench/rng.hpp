#pragma once

#include <cstdint>
#include <string_view>

namespace mirrorbench {

/// Deterministic counter-based random stream (splitmix64 core).
///
/// Every random decision in the system draws from a stream derived from the
/// single run seed plus a textual label (e.g. "vote/gsm8k-0003/7"), so results
/// are reproducible bit-for-bit regardless of platform, standard library, or
/// worker scheduling. std::mt19937 plus std distributions are deliberately
/// avoided: their output is not pinned across implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Unbiased integer in [0, n). n = 0 or 1 returns 0 without consuming state.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~0ULL - ~0ULL % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % bound);
  }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// FNV-1a over the label bytes; stable across platforms.
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Named sub-stream of a run seed. Identical (seed, label) pairs always yield
/// identical streams.
inline RngStream derive_stream(std::uint64_t seed, std::string_view label) {
  return RngStream(seed ^ hash_label(label));
}

}  // namespace mirrorbench
