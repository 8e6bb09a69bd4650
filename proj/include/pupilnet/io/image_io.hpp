#pragma once

#include <filesystem>
#include <string>

#include "pupilnet/error.hpp"
#include "pupilnet/image.hpp"

namespace pupilnet::io {

enum class ImageErrc { Unreadable, UnsupportedFormat, Truncated, Corrupt, Unwritable };

class ImageError : public Error {
 public:
  ImageError(ImageErrc code, const std::string& what) : Error(what), code_(code) {}
  ImageErrc code() const { return code_; }

 private:
  ImageErrc code_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Binary PGM (P5, maxval <= 255) or PNG. Color PNGs are converted with
/// round-half-up of 0.299 R + 0.587 G + 0.114 B; alpha is dropped and 16-bit
/// samples are reduced to 8 bits.
GrayImage load_image(const std::filesystem::path& path);

/// Reads only the header.
ImageSize read_image_size(const std::filesystem::path& path);

void save_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Luminance of an sRGB triple with half-up rounding.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace pupilnet::io
