#include "scn/image.hpp"

#include <fstream>
#include <string>

namespace scn {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& why) {
  throw DataError("image " + path.string() + ": " + why);
}

// Skips whitespace and '#' comment lines, then parses a nonnegative integer.
int read_header_int(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) return -1;
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

Image Image::black(int width, int height, int channels) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(static_cast<size_t>(width) * height * channels, 0);
  return img;
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");

  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels = 0;
  if (magic[0] == 'P' && magic[1] == '5') channels = 1;
  else if (magic[0] == 'P' && magic[1] == '6') channels = 3;
  else fail(path, "not a binary PGM (P5) or PPM (P6) file");

  const int width = read_header_int(in);
  const int height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (width <= 0 || height <= 0) fail(path, "invalid dimensions");
  if (maxval <= 0 || maxval > 255) fail(path, "only 8-bit samples supported");
  // The header terminator is the single whitespace byte already consumed by
  // read_header_int after maxval's last digit.

  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.resize(static_cast<size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    fail(path, "truncated pixel data");
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw UsageError("write_image: only 1 or 3 channels supported");
  }
  if (image.pixels.size() !=
      static_cast<size_t>(image.width) * image.height * image.channels) {
    throw UsageError("write_image: pixel buffer does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << (image.channels == 1 ? "P5" : "P6") << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) fail(path, "write failed");
}

}  // namespace scn
