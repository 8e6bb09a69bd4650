#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pupilnet/geometry.hpp"
#include "pupilnet/image.hpp"

namespace pupilnet {

/// Eye image with its hand-labeled pupil center in full-resolution coordinates.
struct LabeledFrame {
  GrayImage image;
  Point2 pupil;
  std::string dataset_id;
  std::size_t frame_index = 0;
};

struct Dataset {
  std::string id;
  std::vector<LabeledFrame> frames;
};

/// Identifies one source frame across datasets.
struct FrameKey {
  std::string dataset_id;
  std::size_t frame_index = 0;

  friend auto operator<=>(const FrameKey&, const FrameKey&) = default;
};

}  // namespace pupilnet
