#pragma once

// Reproducible random streams.
//
// Xoshiro256** seeded through SplitMix64. Uniform doubles take the top 53
// bits of one 64-bit output. Gaussian draws use Box-Muller and always consume
// exactly two uniforms (the sine branch is discarded), so the position of
// every draw in the stream is a function of the draw count alone.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace netdyn {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for the stream identified by (label, index) under a master seed.
///
///   derive_seed(m, label, i) = mix(mix(mix(m) ^ fnv1a(label)) ^ mix(i + 1))
///
/// where mix is the SplitMix64 finalizer applied to x + golden ratio. Streams
/// only depend on their own (label, index) pair, so adding new labels or
/// indices never shifts an existing stream.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ fnv1a64(label));
  return mix64(h ^ mix64(index + 1));
}

class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  double normal() noexcept {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound == 0) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      __extension__ using u128 = unsigned __int128;
      const u128 m = static_cast<u128>(x) * bound;
      if (static_cast<std::uint64_t>(m) >= threshold) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

/// In-place Fisher-Yates shuffle driven by Rng::below.
template <typename Range>
void shuffle(Range& values, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(values));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

}  // namespace netdyn
