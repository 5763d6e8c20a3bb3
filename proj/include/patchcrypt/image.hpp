#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace patchcrypt {

/// 8-bit interleaved RGB raster, row-major.
class Image {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kBitDepth = 8;
  static constexpr std::uint8_t kMaxSample = (1u << kBitDepth) - 1;

  Image() = default;
  Image(int width, int height);
  Image(int width, int height, std::vector<std::uint8_t> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return samples_.empty(); }

  std::uint8_t at(int x, int y, int c) const {
    return samples_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c) { return samples_[index(x, y, c)]; }

  std::span<const std::uint8_t> samples() const { return samples_; }
  std::span<std::uint8_t> samples() { return samples_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// A square-or-rectangular tile cut from an image. Same layout as Image.
using Block = Image;

/// Row-major array of equally sized blocks plus the grid shape.
struct BlockGrid {
  int block_width = 0;
  int block_height = 0;
  int columns = 0;
  int rows = 0;
  std::vector<Block> blocks;

  int size() const { return columns * rows; }
  const Block& at(int row, int col) const { return blocks[row * columns + col]; }
};

/// Number of whole blocks that fit, floor(X/Bx) * floor(Y/By).
std::size_t block_count(int width, int height, int block_width,
                        int block_height);

/// Cuts `image` into blocks, left to right then top to bottom. Trailing
/// pixels that do not fill a whole block are dropped.
BlockGrid blockify(const Image& image, int block_width, int block_height);

Image deblockify(const BlockGrid& grid);

/// Crops away the trailing pixels that blockify would discard.
Image trim_to_blocks(const Image& image, int block_width, int block_height);

/// Bilinear resampling with half-pixel centers and edge clamping. Each
/// output sample is rounded to nearest, ties away from zero.
Image resize_bilinear(const Image& image, int width, int height);

/// Copies a width x height window starting at (x, y).
Image crop(const Image& image, int x, int y, int width, int height);

}  // namespace patchcrypt
