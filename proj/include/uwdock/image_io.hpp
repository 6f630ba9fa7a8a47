#pragma once

#include <string>

#include "uwdock/optics.hpp"

namespace uwdock {

/// 8-bit quantization used by all image dumps: round half up on the
/// clamped sample, q = floor(255 * v + 0.5).
std::uint8_t quantize8(double v);

/// Write a binary PPM (P6); bit-exact for a given image.
void write_ppm(const RasterImage& image, const std::string& path);

/// Write the luminance plane as a binary PGM (P5).
void write_pgm(const RasterImage& image, const std::string& path);

/// Read a binary PPM (P6, maxval 255) back into [0, 1] samples.
RasterImage read_ppm(const std::string& path);

}  // namespace uwdock
