#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pupilnet {

/// Single-channel 8-bit raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
    if (w < 0 || h < 0) throw std::invalid_argument("GrayImage: negative dimensions");
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
  }

  bool empty() const { return pixels.empty(); }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

}  // namespace pupilnet
