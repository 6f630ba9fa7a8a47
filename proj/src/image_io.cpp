#include "uwdock/image_io.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "uwdock/errors.hpp"

namespace uwdock {

std::uint8_t quantize8(double v) {
  v = clamp(v, 0.0, 1.0);
  const double q = std::floor(255.0 * v + 0.5);
  return static_cast<std::uint8_t>(q);
}

void write_ppm(const RasterImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_ppm: cannot open " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const size_t i = image.idx(x, y);
      row[3 * x + 0] = quantize8(image.r[i]);
      row[3 * x + 1] = quantize8(image.g[i]);
      row[3 * x + 2] = quantize8(image.b[i]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

void write_pgm(const RasterImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_pgm: cannot open " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<size_t>(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      row[x] = quantize8(image.luminance(x, y));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

RasterImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_ppm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0) {
    throw ConfigError("read_ppm: unsupported format in " + path);
  }
  in.get();  // single whitespace after the header
  RasterImage img(w, h);
  std::vector<std::uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
    if (!in) throw ConfigError("read_ppm: truncated file " + path);
    for (int x = 0; x < w; ++x) {
      const size_t i = img.idx(x, y);
      img.r[i] = row[3 * x + 0] / 255.0;
      img.g[i] = row[3 * x + 1] / 255.0;
      img.b[i] = row[3 * x + 2] / 255.0;
    }
  }
  return img;
}

}  // namespace uwdock
