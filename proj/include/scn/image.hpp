#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scn/error.hpp"

namespace scn {

/// 8-bit raster, row-major, channels interleaved. 1 channel = grayscale (PGM),
/// 3 channels = color (PPM).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  static Image black(int width, int height, int channels = 1);

  uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  void set(int x, int y, int c, uint8_t v) {
    pixels[(static_cast<size_t>(y) * width + x) * channels + c] = v;
  }

  bool operator==(const Image&) const = default;
};

/// Reads a binary PGM (P5) or PPM (P6) file with 8-bit samples.
/// Malformed content is a DataError naming the path.
Image read_image(const std::filesystem::path& path);

/// Writes canonical binary PGM/PPM ("P5\n<w> <h>\n255\n" + raw samples);
/// reading the written file back yields identical pixels and identical bytes.
void write_image(const std::filesystem::path& path, const Image& image);

}  // namespace scn
