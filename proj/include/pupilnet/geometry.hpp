#pragma once

#include <cmath>

namespace pupilnet {

/// Continuous image coordinate. The center of the top-left pixel is (0, 0).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
};

/// Integer pixel position.
struct PixelPos {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelPos&, const PixelPos&) = default;
  Point2 to_point() const { return {static_cast<double>(x), static_cast<double>(y)}; }
};

/// Nearest pixel, halves rounded up.
inline PixelPos round_to_pixel(const Point2& p) {
  return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

}  // namespace pupilnet
