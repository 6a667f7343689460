#include "fieldcal/png_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>

#include <png.h>

#include "fieldcal/errors.hpp"

namespace fieldcal::png {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

void write_impl(const std::filesystem::path& path, int width, int height, int color_type,
                int bit_depth, const std::vector<png_bytep>& rows) {
  FilePtr f = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed writing '" + path.string() + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth < 8) png_set_packing(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void write(const std::filesystem::path& path, int width, int height, int channels,
           std::span<const std::uint8_t> pixels) {
  if (channels != 1 && channels != 3) throw std::invalid_argument("png: 1 or 3 channels");
  if (pixels.size() != std::size_t(width) * height * channels)
    throw std::invalid_argument("png: pixel buffer size mismatch");
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels.data() + std::size_t(y) * width * channels);
  write_impl(path, width, height, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8,
             rows);
}

void write_bilevel(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> pixels) {
  if (pixels.size() != std::size_t(width) * height)
    throw std::invalid_argument("png: pixel buffer size mismatch");
  // png_set_packing packs one sample per byte, values 0/1.
  std::vector<std::uint8_t> bits(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) bits[i] = pixels[i] ? 1 : 0;
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = bits.data() + std::size_t(y) * width;
  write_impl(path, width, height, PNG_COLOR_TYPE_GRAY, 1, rows);
}

Image read(const std::filesystem::path& path) {
  FilePtr f = open(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("'" + path.string() + "' is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  Image img;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path.string() + "': corrupt PNG data");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (depth == 16) png_set_strip_16(png);
  if (depth < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path.string() + "': unsupported channel layout");
  }
  img.pixels.resize(std::size_t(img.width) * img.height * img.channels);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.pixels.data() + std::size_t(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace fieldcal::png
