#include "patchcrypt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

namespace patchcrypt {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ImageIoError("cannot open " + path.string());
  return f;
}

struct PngContext {
  char message[256] = "libpng error";
};

[[noreturn]] void png_on_error(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof ctx->message, "libpng: %s", msg);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// The setjmp frames below own no objects with destructors; everything they
// fill in lives in the caller.
bool read_png_body(png_structp png, png_infop info, std::FILE* file, Image* image,
                   std::vector<png_bytep>* rows, PngContext* ctx) {
  if (setjmp(png_jmpbuf(png)) != 0) return false;
  png_init_io(png, file);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
    std::snprintf(ctx->message, sizeof ctx->message, "unsupported PNG layout");
    return false;
  }
  *image = Image(width, height);
  rows->resize(height);
  for (int y = 0; y < height; ++y) {
    (*rows)[y] = &image->samples()[static_cast<std::size_t>(y) * width * 3];
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  return true;
}

bool write_png_body(png_structp png, png_infop info, std::FILE* file, const Image* image,
                    std::vector<png_bytep>* rows) {
  if (setjmp(png_jmpbuf(png)) != 0) return false;
  png_init_io(png, file);
  png_set_IHDR(png, info, image->width(), image->height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ImageIoError(path.string() + " is not a PNG file");
  }
  PngContext ctx;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx,
                                           png_on_error, png_on_warning);
  if (!png) throw ImageIoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Image image;
  std::vector<png_bytep> rows;
  const bool ok = info && read_png_body(png, info, file.get(), &image, &rows, &ctx);
  png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  if (!ok) throw ImageIoError(path.string() + ": " + ctx.message);
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  FilePtr file = open_file(path, "wb");
  PngContext ctx;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx,
                                            png_on_error, png_on_warning);
  if (!png) throw ImageIoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y) {
    rows[y] = const_cast<png_bytep>(
        &image.samples()[static_cast<std::size_t>(y) * image.width() * 3]);
  }
  const bool ok = info && write_png_body(png, info, file.get(), &image, &rows);
  png_destroy_write_struct(&png, info ? &info : nullptr);
  if (!ok) throw ImageIoError(path.string() + ": " + ctx.message);
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());

  auto next_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        tok.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
    return tok;
  };

  if (next_token() != "P6") throw ImageIoError(path.string() + " is not a P6 PPM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ImageIoError(path.string() + ": malformed PPM header");
  }
  if (width < 1 || height < 1 || maxval != 255) {
    throw ImageIoError(path.string() + ": unsupported PPM (need maxval 255)");
  }
  Image image(width, height);
  in.read(reinterpret_cast<char*>(image.samples().data()),
          static_cast<std::streamsize>(image.samples().size()));
  if (!in) throw ImageIoError(path.string() + ": truncated PPM data");
  return image;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot open " + path.string());
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.samples().data()),
            static_cast<std::streamsize>(image.samples().size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm" || ext == ".pnm") return read_ppm(path);
  return read_png(path);
}

void write_image(const std::filesystem::path& path, const Image& image) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm" || ext == ".pnm") {
    write_ppm(path, image);
  } else {
    write_png(path, image);
  }
}

}  // namespace patchcrypt
