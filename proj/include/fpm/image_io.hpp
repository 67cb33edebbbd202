#pragma once

#include <string>

#include "fpm/core.hpp"

namespace fpm::image_io {

/// Reads a grayscale or color image (PGM/PPM, and PNG when built with
/// libpng) and returns the per-pixel sum of three 8-bit channels, so values
/// lie in [0, 765]. Grayscale sources count their single channel three
/// times. 16-bit sources are scaled down to 8-bit first.
Grid2D read_channel_sum(const std::string& path);

/// 8-bit binary PGM with a fixed value range: lo maps to 0, hi to 255,
/// values outside are clamped.
void write_pgm(const std::string& path, const Grid2D& img, double lo, double hi);

bool has_png_support();

}  // namespace fpm::image_io
