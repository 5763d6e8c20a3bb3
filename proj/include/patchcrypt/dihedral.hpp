#pragma once

#include <array>
#include <cstdint>

#include "patchcrypt/image.hpp"

namespace patchcrypt {

/// Element of the dihedral group D4 acting on a square block.
///
/// code = rot + 4 * flip. The transform first mirrors horizontally (when
/// flip is set) and then rotates counterclockwise by rot * 90 degrees.
class Orientation {
 public:
  static constexpr int kCount = 8;

  constexpr Orientation() = default;
  constexpr explicit Orientation(int code) : code_(static_cast<std::uint8_t>(code & 7)) {}
  static constexpr Orientation from_parts(int rot, bool flip) {
    return Orientation((rot & 3) + (flip ? 4 : 0));
  }

  constexpr int code() const { return code_; }
  constexpr int rotation() const { return code_ & 3; }
  constexpr bool flipped() const { return (code_ & 4) != 0; }
  /// True when the transform exchanges the horizontal and vertical axes.
  constexpr bool swaps_axes() const { return (code_ & 1) != 0; }

  /// Moves a displacement (dr, dc), rows pointing down and columns right.
  constexpr std::array<int, 2> map_offset(int dr, int dc) const {
    if (flipped()) dc = -dc;
    for (int i = 0; i < rotation(); ++i) {
      const int r = -dc;
      dc = dr;
      dr = r;
    }
    return {dr, dc};
  }

  /// Where the pixel at (r, c) lands in a width x height block.
  constexpr std::array<int, 2> map_point(int r, int c, int width, int height) const {
    if (flipped()) c = width - 1 - c;
    for (int i = 0; i < rotation(); ++i) {
      const int nr = width - 1 - c;
      c = r;
      r = nr;
      const int w = width;
      width = height;
      height = w;
    }
    return {r, c};
  }

  /// (*this) after `inner`: apply `inner` first.
  constexpr Orientation after(Orientation inner) const {
    for (int k = 0; k < kCount; ++k) {
      const Orientation cand(k);
      bool same = true;
      for (const auto& v : {std::array<int, 2>{1, 0}, std::array<int, 2>{0, 1}}) {
        const auto once = inner.map_offset(v[0], v[1]);
        if (map_offset(once[0], once[1]) != cand.map_offset(v[0], v[1])) same = false;
      }
      if (same) return cand;
    }
    return {};
  }

  constexpr Orientation inverse() const {
    for (int k = 0; k < kCount; ++k) {
      if (Orientation(k).after(*this).code() == 0) return Orientation(k);
    }
    return {};
  }

  friend constexpr bool operator==(Orientation, Orientation) = default;

 private:
  std::uint8_t code_ = 0;
};

/// Applies the dihedral transform to every channel of `block`.
/// Throws std::invalid_argument for an axis-swapping code on a non-square block.
Block apply_orientation(const Block& block, Orientation orientation);

}  // namespace patchcrypt
