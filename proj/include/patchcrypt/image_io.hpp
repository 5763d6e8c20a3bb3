#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "patchcrypt/image.hpp"

namespace patchcrypt {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PNG inputs of any color type or bit depth are normalized to 8-bit RGB
// (alpha dropped, gray and palette expanded, 16-bit stripped).
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

// Binary PPM (P6), maxval 255 only.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

// Dispatch on extension: .ppm / .pnm go to PPM, everything else to PNG.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

}  // namespace patchcrypt
