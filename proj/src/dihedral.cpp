#include "patchcrypt/dihedral.hpp"

#include <stdexcept>

namespace patchcrypt {

Block apply_orientation(const Block& block, Orientation orientation) {
  if (orientation.code() == 0) return block;
  const int w = block.width();
  const int h = block.height();
  if (orientation.swaps_axes() && w != h) {
    throw std::invalid_argument("apply_orientation: 90/270 degree rotation of a non-square block");
  }
  Block out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto [nr, nc] = orientation.map_point(r, c, w, h);
      for (int ch = 0; ch < Image::kChannels; ++ch) out.at(nc, nr, ch) = block.at(c, r, ch);
    }
  }
  return out;
}

}  // namespace patchcrypt
