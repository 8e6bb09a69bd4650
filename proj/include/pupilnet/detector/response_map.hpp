#pragma once

#include <cstddef>
#include <vector>

#include "pupilnet/geometry.hpp"

namespace pupilnet::detector {

enum class CoordinateSpace { Downscaled, Full };

struct GridPos {
  int col = 0;
  int row = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

/// Ratings of windows evaluated on a regular grid of centers. Cell
/// (col, row) rates the window centered on origin + stride * (col, row).
struct ResponseMap {
  PixelPos origin;
  int stride = 1;
  int cols = 0;
  int rows = 0;
  std::vector<float> ratings;  // row-major, cols * rows
  CoordinateSpace space = CoordinateSpace::Downscaled;

  ResponseMap() = default;
  ResponseMap(PixelPos origin_, int stride_, int cols_, int rows_, CoordinateSpace space_)
      : origin(origin_), stride(stride_), cols(cols_), rows(rows_),
        ratings(static_cast<std::size_t>(cols_) * rows_, 0.0f), space(space_) {}

  bool empty() const { return ratings.empty(); }
  float at(int col, int row) const { return ratings[static_cast<std::size_t>(row) * cols + col]; }
  float& at(int col, int row) { return ratings[static_cast<std::size_t>(row) * cols + col]; }
  PixelPos position(int col, int row) const { return {origin.x + stride * col, origin.y + stride * row}; }
};

struct Peak {
  GridPos grid;
  PixelPos position;
  float rating = 0.0f;
};

/// Maximal cell; ties go to the smallest row, then the smallest column.
/// Throws std::invalid_argument on an empty map.
Peak argmax_response(const ResponseMap& map);

struct SubpixelShift {
  double dx = 0.0;
  double dy = 0.0;
  bool degenerate = false;  // window summed to zero; shift forced to (0, 0)
};

/// Normalizes the n x m neighborhood of `peak` into a distribution and
/// returns its mean offset from the peak, in grid cells. The window shrinks
/// symmetrically where it would leave the map; offsets stay relative to the
/// peak. n and m must be odd and positive.
SubpixelShift refine_subpixel(const ResponseMap& map, GridPos peak, int n = 7, int m = 7);

}  // namespace pupilnet::detector
