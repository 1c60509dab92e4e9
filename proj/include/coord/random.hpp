#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <utility>
#include <vector>

namespace coord {

// Portable counter-based random streams.
//
// A stream is SplitMix64 seeded with a 64-bit key. Keys are derived from a
// master seed and a path of integers (replication, purpose, index, ...):
//
//   key = mix64(seed); for each w in path: key = mix64(key ^ w)
//   output_k = mix64(key + k * 0x9e3779b97f4a7c15), k = 1, 2, ...
//
// mix64 is the SplitMix64 finalizer. Uniform doubles use the top 53 bits,
// normals use Box-Muller (cosine branch, two uniforms per draw), bounded
// integers use rejection on the raw 64-bit output. Every step is integer
// arithmetic or libm, so any language reproduces the same draws.

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = mix64(seed);
  for (auto w : path) key = mix64(key ^ w);
  return key;
}

/// Purposes distinguish independent streams under the same (seed, replication).
enum class StreamPurpose : std::uint64_t {
  InitialBelief = 1,
  Reshuffle = 2,
  Compare = 3,
  Synthesize = 4,
  Test = 99,
};

class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
      : key_(derive_key(seed, path)) {}

  static Stream for_purpose(std::uint64_t seed, std::uint64_t replication, StreamPurpose purpose,
                            std::uint64_t index = 0) noexcept {
    return Stream(seed, {replication, static_cast<std::uint64_t>(purpose), index});
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_below() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() noexcept {
    const double u1 = uniform_open_below();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Fisher-Yates, from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace coord
