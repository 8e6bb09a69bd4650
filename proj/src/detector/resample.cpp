#include "pupilnet/detector/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pupilnet::detector {

double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  int first = 0;
  std::vector<double> weights;
};

// Filter taps for every output sample along one axis.
std::vector<Taps> build_taps(int out_size, int factor) {
  std::vector<Taps> taps(out_size);
  const double support = 2.0 * factor;
  for (int o = 0; o < out_size; ++o) {
    const double center = factor * o + (factor - 1) / 2.0;
    const int first = static_cast<int>(std::floor(center - support)) + 1;
    const int last = static_cast<int>(std::ceil(center + support)) - 1;
    Taps& t = taps[o];
    t.first = first;
    double total = 0.0;
    for (int i = first; i <= last; ++i) {
      const double w = catmull_rom((i - center) / factor);
      t.weights.push_back(w);
      total += w;
    }
    for (double& w : t.weights) w /= total;
  }
  return taps;
}

}  // namespace

GrayImage downscale_bicubic(const GrayImage& image, int factor) {
  if (factor < 1) throw std::invalid_argument("downscale_bicubic: factor must be >= 1");
  const int out_w = image.width / factor;
  const int out_h = image.height / factor;
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("downscale_bicubic: image smaller than the factor");
  if (factor == 1) {
    GrayImage copy(out_w, out_h);
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x) copy.at(x, y) = image.at(x, y);
    return copy;
  }
  // Crop to the factor grid; clamping then uses the cropped extent.
  const int in_w = out_w * factor;
  const int in_h = out_h * factor;
  const auto tx = build_taps(out_w, factor);
  const auto ty = build_taps(out_h, factor);

  std::vector<double> horizontal(static_cast<std::size_t>(out_w) * in_h);
  for (int y = 0; y < in_h; ++y) {
    for (int ox = 0; ox < out_w; ++ox) {
      const Taps& t = tx[ox];
      double acc = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        const int x = std::clamp(t.first + static_cast<int>(k), 0, in_w - 1);
        acc += t.weights[k] * image.at(x, y);
      }
      horizontal[static_cast<std::size_t>(y) * out_w + ox] = acc;
    }
  }

  GrayImage out(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    const Taps& t = ty[oy];
    for (int ox = 0; ox < out_w; ++ox) {
      double acc = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        const int y = std::clamp(t.first + static_cast<int>(k), 0, in_h - 1);
        acc += t.weights[k] * horizontal[static_cast<std::size_t>(y) * out_w + ox];
      }
      out.at(ox, oy) = static_cast<std::uint8_t>(std::clamp(std::floor(acc + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace pupilnet::detector
