#pragma once

#include "pupilnet/image.hpp"

namespace pupilnet::detector {

/// Catmull-Rom cubic (a = -0.5).
double catmull_rom(double t);

/// Integer-factor bicubic downscaling. Output pixel i is centered on input
/// coordinate factor * i + (factor - 1) / 2; the Catmull-Rom kernel is
/// stretched by the factor (area-aware filtering) and weights are
/// renormalized. Edge pixels are replicated. Dimensions that are not a
/// multiple of the factor are cropped at the bottom/right first. Throws
/// std::invalid_argument when factor < 1 or the image is smaller than factor.
GrayImage downscale_bicubic(const GrayImage& image, int factor);

}  // namespace pupilnet::detector
