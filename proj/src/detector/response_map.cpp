#include "pupilnet/detector/response_map.hpp"

#include <algorithm>
#include <stdexcept>

namespace pupilnet::detector {

Peak argmax_response(const ResponseMap& map) {
  if (map.empty()) throw std::invalid_argument("argmax_response: empty response map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.ratings.size(); ++i)
    if (map.ratings[i] > map.ratings[best]) best = i;
  Peak peak;
  peak.grid = {static_cast<int>(best % map.cols), static_cast<int>(best / map.cols)};
  peak.position = map.position(peak.grid.col, peak.grid.row);
  peak.rating = map.ratings[best];
  return peak;
}

SubpixelShift refine_subpixel(const ResponseMap& map, GridPos peak, int n, int m) {
  if (n < 1 || m < 1 || n % 2 == 0 || m % 2 == 0)
    throw std::invalid_argument("refine_subpixel: window dimensions must be odd and positive");
  if (peak.col < 0 || peak.row < 0 || peak.col >= map.cols || peak.row >= map.rows)
    throw std::invalid_argument("refine_subpixel: peak outside the response map");
  const int hx = std::min({n / 2, peak.col, map.cols - 1 - peak.col});
  const int hy = std::min({m / 2, peak.row, map.rows - 1 - peak.row});

  double total = 0.0;
  for (int j = -hy; j <= hy; ++j)
    for (int i = -hx; i <= hx; ++i) total += map.at(peak.col + i, peak.row + j);
  SubpixelShift shift;
  if (!(total > 0.0)) {
    shift.degenerate = true;
    return shift;
  }
  for (int j = -hy; j <= hy; ++j) {
    for (int i = -hx; i <= hx; ++i) {
      const double d = map.at(peak.col + i, peak.row + j) / total;
      shift.dx += d * i;
      shift.dy += d * j;
    }
  }
  return shift;
}

}  // namespace pupilnet::detector
