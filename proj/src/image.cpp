#include "patchcrypt/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace patchcrypt {

Image::Image(int width, int height) {
  if (width < 0 || height < 0) {
    throw std::invalid_argument("image dimensions must be non-negative");
  }
  width_ = width;
  height_ = height;
  samples_.assign(static_cast<std::size_t>(width) * height * kChannels, 0);
}

Image::Image(int width, int height, std::vector<std::uint8_t> samples)
    : Image(width, height) {
  if (samples.size() != samples_.size()) {
    throw std::invalid_argument("sample count " + std::to_string(samples.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height) + "x3");
  }
  samples_ = std::move(samples);
}

std::size_t block_count(int width, int height, int block_width,
                        int block_height) {
  if (width < 1 || height < 1 || block_width < 1 || block_height < 1) {
    throw std::invalid_argument("block_count: all dimensions must be >= 1");
  }
  return static_cast<std::size_t>(width / block_width) *
         static_cast<std::size_t>(height / block_height);
}

BlockGrid blockify(const Image& image, int block_width, int block_height) {
  if (block_width < 1 || block_height < 1) {
    throw std::invalid_argument("blockify: block size must be >= 1");
  }
  if (block_width > image.width() || block_height > image.height()) {
    throw std::invalid_argument(
        "blockify: block " + std::to_string(block_width) + "x" +
        std::to_string(block_height) + " larger than image " +
        std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  BlockGrid grid;
  grid.block_width = block_width;
  grid.block_height = block_height;
  grid.columns = image.width() / block_width;
  grid.rows = image.height() / block_height;
  grid.blocks.reserve(grid.size());

  const std::size_t row_bytes =
      static_cast<std::size_t>(block_width) * Image::kChannels;
  for (int by = 0; by < grid.rows; ++by) {
    for (int bx = 0; bx < grid.columns; ++bx) {
      Block block(block_width, block_height);
      for (int y = 0; y < block_height; ++y) {
        const auto* src = &image.samples()[(static_cast<std::size_t>(by * block_height + y) *
                                                image.width() +
                                            bx * block_width) *
                                           Image::kChannels];
        std::copy_n(src, row_bytes, &block.samples()[y * row_bytes]);
      }
      grid.blocks.push_back(std::move(block));
    }
  }
  return grid;
}

Image deblockify(const BlockGrid& grid) {
  if (grid.columns < 1 || grid.rows < 1 ||
      grid.blocks.size() != static_cast<std::size_t>(grid.size())) {
    throw std::invalid_argument("deblockify: malformed grid");
  }
  Image out(grid.columns * grid.block_width, grid.rows * grid.block_height);
  const std::size_t row_bytes =
      static_cast<std::size_t>(grid.block_width) * Image::kChannels;
  for (int by = 0; by < grid.rows; ++by) {
    for (int bx = 0; bx < grid.columns; ++bx) {
      const Block& block = grid.at(by, bx);
      if (block.width() != grid.block_width ||
          block.height() != grid.block_height) {
        throw std::invalid_argument("deblockify: block has wrong size");
      }
      for (int y = 0; y < grid.block_height; ++y) {
        auto* dst = &out.samples()[(static_cast<std::size_t>(by * grid.block_height + y) *
                                        out.width() +
                                    bx * grid.block_width) *
                                   Image::kChannels];
        std::copy_n(&block.samples()[y * row_bytes], row_bytes, dst);
      }
    }
  }
  return out;
}

Image crop(const Image& image, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width < 0 || height < 0 || x + width > image.width() ||
      y + height > image.height()) {
    throw std::invalid_argument("crop: window outside image");
  }
  Image out(width, height);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * Image::kChannels;
  for (int r = 0; r < height; ++r) {
    const auto* src =
        &image.samples()[(static_cast<std::size_t>(y + r) * image.width() + x) *
                         Image::kChannels];
    std::copy_n(src, row_bytes, &out.samples()[r * row_bytes]);
  }
  return out;
}

Image trim_to_blocks(const Image& image, int block_width, int block_height) {
  if (block_width < 1 || block_height < 1) {
    throw std::invalid_argument("trim_to_blocks: block size must be >= 1");
  }
  return crop(image, 0, 0, image.width() / block_width * block_width,
              image.height() / block_height * block_height);
}

namespace {

struct Tap {
  int lo;
  int hi;
  double weight;  // of `hi`
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, src - 1);
    taps[i] = {lo, hi, pos - lo};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& image, int width, int height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("resize_bilinear: target size must be >= 1");
  }
  if (image.empty()) {
    throw std::invalid_argument("resize_bilinear: empty source image");
  }
  if (width == image.width() && height == image.height()) return image;

  const auto xs = bilinear_taps(image.width(), width);
  const auto ys = bilinear_taps(image.height(), height);
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = image.at(tx.lo, ty.lo, c) * (1.0 - tx.weight) +
                           image.at(tx.hi, ty.lo, c) * tx.weight;
        const double bottom = image.at(tx.lo, ty.hi, c) * (1.0 - tx.weight) +
                              image.at(tx.hi, ty.hi, c) * tx.weight;
        const double v = top * (1.0 - ty.weight) + bottom * ty.weight;
        out.at(x, y, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround(v), 0L, static_cast<long>(Image::kMaxSample)));
      }
    }
  }
  return out;
}

}  // namespace patchcrypt
