#include "pupilnet/detector/detector.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "pupilnet/detector/resample.hpp"
#include "pupilnet/detector/scanner.hpp"
#include "pupilnet/nn/kernels.hpp"

namespace pupilnet::detector {

std::vector<std::uint8_t> extract_patch_pixels(const GrayImage& image, PixelPos center, int size) {
  if (size < 1) throw std::invalid_argument("extract_patch: size must be >= 1");
  if (image.empty()) throw std::invalid_argument("extract_patch: empty image");
  const int left = center.x - window_lead(size);
  const int top = center.y - window_lead(size);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    const int sy = std::clamp(top + y, 0, image.height - 1);
    for (int x = 0; x < size; ++x) {
      const int sx = std::clamp(left + x, 0, image.width - 1);
      out[static_cast<std::size_t>(y) * size + x] = image.at(sx, sy);
    }
  }
  return out;
}

nn::Tensor3 normalize_patch(const std::vector<std::uint8_t>& pixels, int size) {
  if (pixels.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("normalize_patch: pixel count does not match size");
  const auto& lut = nn::kernels::intensity_table();
  nn::Tensor3 patch(size, size, 1);
  for (std::size_t i = 0; i < pixels.size(); ++i) patch.values[i] = lut[pixels[i]];
  return patch;
}

nn::Tensor3 extract_patch(const GrayImage& image, PixelPos center, int size) {
  return normalize_patch(extract_patch_pixels(image, center, size), size);
}

ResponseMap coarse_response_map(const GrayImage& image_ds, const nn::NetworkModel& model, int stride) {
  const int s = model.input_size;
  if (stride < 1) throw std::invalid_argument("coarse_response_map: stride must be >= 1");
  if (image_ds.width < s || image_ds.height < s)
    throw std::invalid_argument("coarse_response_map: " + std::to_string(image_ds.width) + "x" +
                                std::to_string(image_ds.height) + " image is smaller than the " + std::to_string(s) +
                                "x" + std::to_string(s) + " window");
  const int cols = (image_ds.width - s) / stride + 1;
  const int rows = (image_ds.height - s) / stride + 1;
  const int lead = window_lead(s);
  ResponseMap map({lead, lead}, stride, cols, rows, CoordinateSpace::Downscaled);
  const WindowScanner scanner(model, image_ds, {0, 0}, {(cols - 1) * stride, (rows - 1) * stride});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) map.at(c, r) = scanner.rate(c * stride, r * stride);
  return map;
}

Point2 upsample_position(Point2 pos_ds, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample_position: factor must be >= 1");
  const double offset = (factor - 1) / 2.0;
  return {pos_ds.x * factor + offset, pos_ds.y * factor + offset};
}

Point2 downsample_position(Point2 pos_full, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample_position: factor must be >= 1");
  const double offset = (factor - 1) / 2.0;
  return {(pos_full.x - offset) / factor, (pos_full.y - offset) / factor};
}

ResponseMap fine_detect(const GrayImage& image, Point2 coarse, const nn::NetworkModel& fine_model, int radius,
                        int stride) {
  if (fine_model.config != nn::ConfigName::Fine)
    throw std::invalid_argument("fine_detect: expected a FINE model, got " +
                                std::string(nn::to_string(fine_model.config)));
  if (radius < 0 || stride < 1) throw std::invalid_argument("fine_detect: radius must be >= 0 and stride >= 1");
  const int s = fine_model.input_size;
  if (image.width < s || image.height < s)
    throw std::invalid_argument("fine_detect: image smaller than the fine window");
  const int steps = radius / stride;
  const int n = 2 * steps + 1;
  const PixelPos base = round_to_pixel(coarse);
  const PixelPos origin{base.x - steps * stride, base.y - steps * stride};
  ResponseMap map(origin, stride, n, n, CoordinateSpace::Full);

  const int lead = window_lead(s);
  auto clamp_left = [&](int center) { return std::clamp(center - lead, 0, image.width - s); };
  auto clamp_top = [&](int center) { return std::clamp(center - lead, 0, image.height - s); };
  const PixelPos last = map.position(n - 1, n - 1);
  const WindowScanner scanner(fine_model, image, {clamp_left(origin.x), clamp_top(origin.y)},
                              {clamp_left(last.x), clamp_top(last.y)});
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const PixelPos center = map.position(c, r);
      map.at(c, r) = scanner.rate(clamp_left(center.x), clamp_top(center.y));
    }
  }
  return map;
}

TwoPhaseResult two_phase_search(const WindowRater& rater, int scan_stride, int local_size, CoordinateSpace space) {
  if (rater.cols < 1 || rater.rows < 1) throw std::invalid_argument("two_phase_search: empty candidate grid");
  if (scan_stride < 1 || local_size < 1) throw std::invalid_argument("two_phase_search: invalid stride or size");
  TwoPhaseResult result;
  const int scan_cols = (rater.cols - 1) / scan_stride + 1;
  const int scan_rows = (rater.rows - 1) / scan_stride + 1;
  result.scan = ResponseMap(rater.first_center, scan_stride, scan_cols, scan_rows, space);
  for (int r = 0; r < scan_rows; ++r)
    for (int c = 0; c < scan_cols; ++c) result.scan.at(c, r) = rater.rate(c * scan_stride, r * scan_stride);
  result.scan_peak = argmax_response(result.scan);

  const int half = local_size / 2;
  const int pc = result.scan_peak.grid.col * scan_stride;
  const int pr = result.scan_peak.grid.row * scan_stride;
  const int c0 = std::max(0, pc - half);
  const int c1 = std::min(rater.cols - 1, pc + half);
  const int r0 = std::max(0, pr - half);
  const int r1 = std::min(rater.rows - 1, pr + half);
  result.local = ResponseMap({rater.first_center.x + c0, rater.first_center.y + r0}, 1, c1 - c0 + 1, r1 - r0 + 1,
                             space);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) result.local.at(c - c0, r - r0) = rater.rate(c, r);
  result.local_peak = argmax_response(result.local);
  return result;
}

DetectionResult detect_two_stage(const GrayImage& image, const nn::NetworkModel& coarse_model,
                                 const nn::NetworkModel& fine_model, const TwoStageSettings& settings) {
  if (coarse_model.config == nn::ConfigName::Fine)
    throw std::invalid_argument("detect_two_stage: the coarse stage cannot use a FINE model");
  const GrayImage ds = downscale_bicubic(image, settings.downscale_factor);
  const ResponseMap coarse_map = coarse_response_map(ds, coarse_model, settings.coarse_stride);
  const Peak coarse_peak = argmax_response(coarse_map);

  DetectionResult result;
  result.coarse_center = upsample_position(coarse_peak.position.to_point(), settings.downscale_factor);
  result.stats.coarse_evaluations = coarse_map.ratings.size();

  const ResponseMap fine_map = fine_detect(image, result.coarse_center, fine_model, settings.radius,
                                           settings.fine_stride);
  result.stats.fine_evaluations = fine_map.ratings.size();
  const Peak fine_peak = argmax_response(fine_map);
  result.fine_center = fine_peak.position.to_point();
  result.refined_center = *result.fine_center;
  result.confidence = fine_peak.rating;
  if (settings.fine_stride == 1) {
    const SubpixelShift shift =
        refine_subpixel(fine_map, fine_peak.grid, settings.refine_size, settings.refine_size);
    result.refined_center = *result.fine_center + Point2{shift.dx, shift.dy};
    result.degenerate_refinement = shift.degenerate;
  }
  return result;
}

DetectionResult detect_direct(const GrayImage& image, const nn::NetworkModel& model, const DirectSettings& settings) {
  if (model.config != nn::ConfigName::SK8P8)
    throw std::invalid_argument("detect_direct: expected an SK8P8 model, got " +
                                std::string(nn::to_string(model.config)));
  const GrayImage ds = downscale_bicubic(image, settings.downscale_factor);
  const int s = model.input_size;
  if (ds.width < s || ds.height < s)
    throw std::invalid_argument("detect_direct: downscaled image smaller than the window");
  const WindowScanner scanner(model, ds);
  const int lead = window_lead(s);
  WindowRater rater{{lead, lead}, ds.width - s + 1, ds.height - s + 1,
                    [&scanner](int col, int row) { return scanner.rate(col, row); }};
  const TwoPhaseResult search = two_phase_search(rater, settings.scan_stride, settings.local_size,
                                                 CoordinateSpace::Downscaled);
  const SubpixelShift shift =
      refine_subpixel(search.local, search.local_peak.grid, settings.refine_size, settings.refine_size);

  DetectionResult result;
  result.coarse_center = upsample_position(search.scan_peak.position.to_point(), settings.downscale_factor);
  result.refined_center = upsample_position(search.local_peak.position.to_point() + Point2{shift.dx, shift.dy},
                                            settings.downscale_factor);
  result.confidence = search.local_peak.rating;
  result.degenerate_refinement = shift.degenerate;
  result.stats.coarse_evaluations = search.scan.ratings.size();
  result.stats.fine_evaluations = search.local.ratings.size();
  return result;
}

}  // namespace pupilnet::detector
