#pragma once

#include <cstdint>
#include <stdexcept>

namespace patchcrypt {

/// SplitMix64 (Steele, Lea and Flood, 2014), the reference constants from
/// Vigna's splitmix64.c. The state advances by the golden-ratio increment
/// and each output is the state passed through the variant-13 mixer.
///
/// Seed 0 yields e220a8397b1dcdaf 6e789e6aa1b965f4 06c45d188009454f
/// f88bb8a8724c81ec ...
class KeyedStream {
 public:
  static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

  explicit constexpr KeyedStream(std::uint64_t key) : state_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t next() {
    state_ += kIncrement;
    return mix(state_);
  }

  /// Unbiased integer in [0, bound). Raw outputs below 2^64 mod bound are
  /// rejected, so a power-of-two bound never rejects.
  constexpr std::uint64_t uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("KeyedStream::uniform: bound must be > 0");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace patchcrypt
