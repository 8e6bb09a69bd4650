#include "pupilnet/io/image_io.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

namespace pupilnet::io {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(ImageErrc::Unreadable, "cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(const std::vector<std::uint8_t>& data) {
  return data.size() >= kPngSignature.size() && std::equal(kPngSignature.begin(), kPngSignature.end(), data.begin());
}

bool is_pgm(const std::vector<std::uint8_t>& data) { return data.size() >= 2 && data[0] == 'P' && data[1] == '5'; }

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PgmHeader parse_pgm_header(const std::vector<std::uint8_t>& data, const std::string& name) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(data[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    if (pos >= data.size()) throw ImageError(ImageErrc::Truncated, name + ": truncated PGM header");
    if (!std::isdigit(data[pos]))
      throw ImageError(ImageErrc::Corrupt, name + ": malformed PGM header (" + what + ")");
    long value = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
      value = value * 10 + (data[pos] - '0');
      if (value > 1'000'000) throw ImageError(ImageErrc::Corrupt, name + ": PGM " + what + " out of range");
      ++pos;
    }
    return static_cast<int>(value);
  };
  PgmHeader h;
  h.width = number("width");
  h.height = number("height");
  h.maxval = number("maxval");
  if (pos >= data.size()) throw ImageError(ImageErrc::Truncated, name + ": truncated PGM header");
  if (!std::isspace(data[pos])) throw ImageError(ImageErrc::Corrupt, name + ": malformed PGM header");
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1) throw ImageError(ImageErrc::Corrupt, name + ": PGM has zero size");
  if (h.maxval < 1 || h.maxval > 255)
    throw ImageError(ImageErrc::UnsupportedFormat, name + ": only 8-bit PGM (maxval <= 255) is supported");
  return h;
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& data, const std::string& name) {
  const PgmHeader h = parse_pgm_header(data, name);
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
  if (data.size() - h.data_offset < count)
    throw ImageError(ImageErrc::Truncated, name + ": truncated PGM pixel data");
  GrayImage image(h.width, h.height);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = data[h.data_offset + i];
    image.pixels[i] = h.maxval == 255 ? static_cast<std::uint8_t>(v)
                                      : static_cast<std::uint8_t>((v * 255u + h.maxval / 2u) / h.maxval);
  }
  return image;
}

struct PngSource {
  const std::vector<std::uint8_t>* data;
  std::size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->data->size() - src->pos < length) png_error(png, "truncated");
  std::memcpy(out, src->data->data() + src->pos, length);
  src->pos += length;
}

void png_error_handler(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  *buffer = message;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// libpng reports failures by longjmp back into this frame.
GrayImage decode_png(const std::vector<std::uint8_t>& data, const std::string& name, bool header_only,
                     ImageSize* size_out) {
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
  if (!png) throw ImageError(ImageErrc::Corrupt, name + ": libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError(ImageErrc::Corrupt, name + ": libpng initialization failed");
  }
  PngSource source{&data, 0};
  GrayImage image;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> raw;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    const bool truncated = error.find("truncated") != std::string::npos || error.find("Read Error") != std::string::npos;
    throw ImageError(truncated ? ImageErrc::Truncated : ImageErrc::Corrupt, name + ": " + error);
  }
  png_set_read_fn(png, &source, png_read_from_memory);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  if (header_only) {
    png_destroy_read_struct(&png, &info, nullptr);
    size_out->width = static_cast<int>(width);
    size_out->height = static_cast<int>(height);
    return image;
  }
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  raw.resize(static_cast<std::size_t>(width) * height * channels);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  image = GrayImage(static_cast<int>(width), static_cast<int>(height));
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (channels == 1) {
    std::copy(raw.begin(), raw.end(), image.pixels.begin());
  } else if (channels == 3) {
    for (std::size_t i = 0; i < count; ++i) image.pixels[i] = luminance(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
  } else {
    throw ImageError(ImageErrc::UnsupportedFormat, name + ": unsupported PNG channel layout");
  }
  return image;
}

}  // namespace

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage load_image(const std::filesystem::path& path) {
  const auto data = read_all(path);
  if (is_png(data)) return decode_png(data, path.string(), false, nullptr);
  if (is_pgm(data)) return decode_pgm(data, path.string());
  throw ImageError(ImageErrc::UnsupportedFormat, path.string() + ": unsupported image format (expected P5 PGM or PNG)");
}

ImageSize read_image_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(ImageErrc::Unreadable, "cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> head(512);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (is_png(head)) {
    ImageSize size;
    decode_png(head, path.string(), true, &size);
    return size;
  }
  if (is_pgm(head)) {
    const PgmHeader h = parse_pgm_header(head, path.string());
    return {h.width, h.height};
  }
  throw ImageError(ImageErrc::UnsupportedFormat, path.string() + ": unsupported image format (expected P5 PGM or PNG)");
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError(ImageErrc::Unwritable, "cannot write '" + path.string() + "'");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw ImageError(ImageErrc::Unwritable, "failed writing '" + path.string() + "'");
}

}  // namespace pupilnet::io
