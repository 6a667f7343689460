#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fieldcal::png {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;
};

/// 8-bit gray or RGB, depending on `channels`.
void write(const std::filesystem::path& path, int width, int height, int channels,
           std::span<const std::uint8_t> pixels);

/// 1-bit gray; any non-zero input pixel is written as 1.
void write_bilevel(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> pixels);

/// Reads a gray or RGB PNG, expanding sub-byte depths to one byte per
/// sample (values are kept, not rescaled, for bit depths below 8).
/// Throws IoError / FormatError.
Image read(const std::filesystem::path& path);

}  // namespace fieldcal::png
