#pragma once

#include <vector>

#include "pupilnet/geometry.hpp"
#include "pupilnet/image.hpp"
#include "pupilnet/nn/network.hpp"

namespace pupilnet::detector {

/// Rates many overlapping windows of one image with a single network.
///
/// The first convolution, its activation and the pooling block sums are
/// computed once over the region covered by all windows; each window then
/// only gathers its pooled cells and runs the small head. Ratings are
/// bit-identical to net_forward on the extracted patch.
class WindowScanner {
 public:
  /// Windows may have any top-left corner in [top_left_min, top_left_max]
  /// (inclusive); all of them must lie fully inside the image.
  WindowScanner(const nn::NetworkModel& model, const GrayImage& image, PixelPos top_left_min,
                PixelPos top_left_max);

  /// Convenience: every window position of the image.
  WindowScanner(const nn::NetworkModel& model, const GrayImage& image);

  float rate(int left, int top) const;
  int window_size() const { return model_->input_size; }

 private:
  const nn::NetworkModel* model_;
  PixelPos min_;
  PixelPos max_;
  int box_width_ = 0;
  int box_height_ = 0;
  std::vector<float> box_;  // channel-major pooled block averages at every offset
};

}  // namespace pupilnet::detector
