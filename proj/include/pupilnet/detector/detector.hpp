#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pupilnet/detector/response_map.hpp"
#include "pupilnet/geometry.hpp"
#include "pupilnet/image.hpp"
#include "pupilnet/nn/network.hpp"

namespace pupilnet::detector {

/// Number of pixels a window of `size` extends before its center pixel.
/// A window centered on c spans [c - lead, c - lead + size - 1], so even
/// sizes extend one pixel further to the bottom/right.
constexpr int window_lead(int size) { return (size - 1) / 2; }

/// Patch pixels with edge clamping (row-major, size x size).
std::vector<std::uint8_t> extract_patch_pixels(const GrayImage& image, PixelPos center, int size);

/// Patch as network input: size x size x 1, intensities scaled to [0, 1].
nn::Tensor3 extract_patch(const GrayImage& image, PixelPos center, int size);
nn::Tensor3 normalize_patch(const std::vector<std::uint8_t>& pixels, int size);

/// Rates every fully contained window whose top-left lies on the stride grid.
/// Throws std::invalid_argument if the image is smaller than the window.
ResponseMap coarse_response_map(const GrayImage& image_ds, const nn::NetworkModel& model, int stride);

/// Center of the factor x factor footprint of a downscaled pixel.
Point2 upsample_position(Point2 pos_ds, int factor);
/// Inverse of upsample_position.
Point2 downsample_position(Point2 pos_full, int factor);

/// Rates 89x89 windows centered on round(coarse) + stride * (i, j) for
/// |stride * i|, |stride * j| <= radius. Windows near the border are shifted
/// inside the image; their cells keep the nominal center.
ResponseMap fine_detect(const GrayImage& image, Point2 coarse, const nn::NetworkModel& fine_model, int radius,
                        int stride);

/// Stride-1 grid of window centers with a rating callback, used by the
/// two-phase search. Cell (col, row) is centered on first_center + (col, row).
struct WindowRater {
  PixelPos first_center;
  int cols = 0;
  int rows = 0;
  std::function<float(int col, int row)> rate;
};

struct TwoPhaseResult {
  ResponseMap scan;    // every scan_stride-th position
  ResponseMap local;   // per-pixel neighborhood of the scan maximum
  Peak scan_peak;
  Peak local_peak;
};

/// Scans every scan_stride-th position, then rates the local_size x local_size
/// per-pixel neighborhood of the best scan position (clipped to the grid).
TwoPhaseResult two_phase_search(const WindowRater& rater, int scan_stride, int local_size, CoordinateSpace space);

struct DetectionStats {
  std::size_t coarse_evaluations = 0;
  std::size_t fine_evaluations = 0;
};

struct DetectionResult {
  Point2 coarse_center;               // full resolution
  std::optional<Point2> fine_center;  // two-stage only
  Point2 refined_center;
  float confidence = 0.0f;
  bool degenerate_refinement = false;
  DetectionStats stats;
};

struct TwoStageSettings {
  int downscale_factor = 4;
  int coarse_stride = 1;
  int radius = 10;
  int fine_stride = 1;
  int refine_size = 7;
};

struct DirectSettings {
  int downscale_factor = 4;
  int scan_stride = 2;
  int local_size = 9;
  int refine_size = 7;
};

/// Downscale, coarse scan, upsample, fine scan around the coarse estimate and
/// subpixel refinement of the fine maximum (only when fine_stride is 1).
DetectionResult detect_two_stage(const GrayImage& image, const nn::NetworkModel& coarse_model,
                                 const nn::NetworkModel& fine_model, const TwoStageSettings& settings = {});

/// Single-stage SK8P8 detection: stride-2 scan of the downscaled image,
/// per-pixel pass around its maximum, subpixel refinement, upsampling.
DetectionResult detect_direct(const GrayImage& image, const nn::NetworkModel& model,
                              const DirectSettings& settings = {});

}  // namespace pupilnet::detector
