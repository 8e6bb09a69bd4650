#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pupilnet/detector/detector.hpp"
#include "pupilnet/detector/resample.hpp"
#include "pupilnet/detector/scanner.hpp"
#include "pupilnet/nn/gradcheck.hpp"

using namespace pupilnet;
using namespace pupilnet::detector;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(px(rng));
  return img;
}

float naive_rating(const nn::NetworkModel& m, const GrayImage& img, PixelPos center) {
  const int s = m.input_size;
  const int lead = (s - 1) / 2;
  nn::Tensor3 patch(s, s, 1);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) patch.at(0, y, x) = img.at(center.x - lead + x, center.y - lead + y) / 255.0f;
  return nn::net_forward(m, patch);
}

}  // namespace

TEST(Detector, WindowLead) {
  EXPECT_EQ(window_lead(24), 11);
  EXPECT_EQ(window_lead(25), 12);
  EXPECT_EQ(window_lead(89), 44);
  EXPECT_EQ(window_lead(7), 3);
}

TEST(Detector, PatchExtractionClampsAtBorders) {
  GrayImage img(6, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * y + x);
  const auto p = extract_patch_pixels(img, {0, 0}, 4);  // spans -1..2
  EXPECT_EQ(p[0], img.at(0, 0));
  EXPECT_EQ(p[1], img.at(0, 0));
  EXPECT_EQ(p[2], img.at(1, 0));
  EXPECT_EQ(p[4 * 3 + 3], img.at(2, 2));
  const auto t = extract_patch(img, {2, 2}, 3);
  EXPECT_FLOAT_EQ(t.at(0, 1, 1), img.at(2, 2) / 255.0f);
}

TEST(Detector, PositionTransformsAreInverse) {
  EXPECT_EQ(upsample_position({0, 0}, 4), (Point2{1.5, 1.5}));
  EXPECT_EQ(upsample_position({10, 3}, 4), (Point2{41.5, 13.5}));
  EXPECT_EQ(downsample_position({41.5, 13.5}, 4), (Point2{10, 3}));
  EXPECT_EQ(upsample_position({5, 7}, 1), (Point2{5, 7}));
  for (double v : {0.0, 3.25, 17.75}) {
    const auto back = downsample_position(upsample_position({v, v}, 4), 4);
    EXPECT_DOUBLE_EQ(back.x, v);
  }
}

TEST(Detector, CoarseMapMatchesNaiveWindowLoop) {
  for (auto config : {nn::ConfigName::CK8P8, nn::ConfigName::SK8P8, nn::ConfigName::CK16P32}) {
    const auto m = nn::random_model(config, 31);
    const auto img = random_image(57, 41, 32);
    for (int stride : {1, 2, 3}) {
      const auto map = coarse_response_map(img, m, stride);
      const int s = m.input_size;
      ASSERT_EQ(map.cols, (57 - s) / stride + 1);
      ASSERT_EQ(map.rows, (41 - s) / stride + 1);
      EXPECT_EQ(map.origin, (PixelPos{window_lead(s), window_lead(s)}));
      for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c) ASSERT_EQ(map.at(c, r), naive_rating(m, img, map.position(c, r)));
    }
  }
  EXPECT_THROW(coarse_response_map(GrayImage(20, 30), nn::build_config(nn::ConfigName::CK8P8), 1),
               std::invalid_argument);
}

TEST(Detector, ScannerAgreesOnEveryWindowOfARegion) {
  const auto m = nn::random_model(nn::ConfigName::Fine, 3);
  const auto img = random_image(110, 100, 4);
  const WindowScanner scanner(m, img, {5, 3}, {21, 11});
  for (int top = 3; top <= 11; top += 4)
    for (int left = 5; left <= 21; left += 8)
      ASSERT_EQ(scanner.rate(left, top), naive_rating(m, img, {left + 44, top + 44}));
}

TEST(Detector, RepeatedContentGivesExactTies) {
  // Period-4 texture: windows four pixels apart see identical pixels, so
  // their ratings tie exactly and the argmax picks the first in row-major order.
  GrayImage img(60, 44);
  for (int y = 0; y < 44; ++y)
    for (int x = 0; x < 60; ++x) img.at(x, y) = static_cast<std::uint8_t>(((x % 4) * 53 + (y % 4) * 17) % 256);
  const auto m = nn::random_model(nn::ConfigName::CK8P8, 5);
  const auto map = coarse_response_map(img, m, 1);
  for (int r = 0; r + 4 < map.rows; ++r)
    for (int c = 0; c + 4 < map.cols; ++c) ASSERT_EQ(map.at(c, r), map.at(c + 4, r + 4));
  const auto peak = argmax_response(map);
  EXPECT_LT(peak.grid.col, 4);
  EXPECT_LT(peak.grid.row, 4);
}

TEST(Detector, FineDetectGridAndClamping) {
  const auto m = nn::random_model(nn::ConfigName::Fine, 7);
  const auto img = random_image(160, 130, 8);
  const auto map = fine_detect(img, {80.3, 64.6}, m, 10, 1);
  EXPECT_EQ(map.cols * map.rows, 441);
  EXPECT_EQ(map.origin, (PixelPos{70, 55}));
  EXPECT_EQ(map.space, CoordinateSpace::Full);
  for (int r = 0; r < 21; r += 5)
    for (int c = 0; c < 21; c += 5) ASSERT_EQ(map.at(c, r), naive_rating(m, img, map.position(c, r)));

  const auto wide = fine_detect(img, {80, 64}, m, 24, 2);
  EXPECT_EQ(wide.cols, 25);
  EXPECT_EQ(wide.stride, 2);

  // Near the left border the window is shifted inside; the cell keeps its
  // nominal center but rates the shifted window.
  const auto edge = fine_detect(img, {44, 64}, m, 3, 1);
  EXPECT_EQ(edge.position(0, 3), (PixelPos{41, 64}));
  EXPECT_EQ(edge.at(0, 3), naive_rating(m, img, {44, 64}));

  EXPECT_THROW(fine_detect(img, {80, 64}, nn::build_config(nn::ConfigName::CK8P8), 10, 1), std::invalid_argument);
}

TEST(Detector, TwoPhaseSearchFindsPlantedMaximum) {
  WindowRater rater{{12, 12}, 40, 30, [](int c, int r) {
                      return static_cast<float>(1.0 / (1.0 + std::hypot(c - 17, r - 9)));
                    }};
  const auto res = two_phase_search(rater, 2, 9, CoordinateSpace::Downscaled);
  EXPECT_EQ(res.scan.cols, 20);
  EXPECT_EQ(res.scan.rows, 15);
  EXPECT_EQ(res.local.cols * res.local.rows, 81);
  EXPECT_EQ(res.local_peak.position, (PixelPos{12 + 17, 12 + 9}));
}

TEST(Detector, DirectMatchesBruteForcePipeline) {
  const auto m = nn::random_model(nn::ConfigName::SK8P8, 41);
  const auto img = random_image(160, 120, 42);
  const auto result = detect_direct(img, m);

  const auto ds = downscale_bicubic(img, 4);
  const int lead = 12;
  const int cols = ds.width - 24, rows = ds.height - 24;
  int best_c = 0, best_r = 0;
  float best = -1.0f;
  for (int r = 0; r < rows; r += 2)
    for (int c = 0; c < cols; c += 2) {
      const float v = naive_rating(m, ds, {c + lead, r + lead});
      if (v > best) best = v, best_c = c, best_r = r;
    }
  const int c0 = std::max(0, best_c - 4), c1 = std::min(cols - 1, best_c + 4);
  const int r0 = std::max(0, best_r - 4), r1 = std::min(rows - 1, best_r + 4);
  int pc = c0, pr = r0;
  best = -1.0f;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const float v = naive_rating(m, ds, {c + lead, r + lead});
      if (v > best) best = v, pc = c, pr = r;
    }
  const int hx = std::min({3, pc - c0, c1 - pc});
  const int hy = std::min({3, pr - r0, r1 - pr});
  double sx = 0, sy = 0, total = 0;
  for (int j = -hy; j <= hy; ++j)
    for (int i = -hx; i <= hx; ++i) {
      const double v = naive_rating(m, ds, {pc + i + lead, pr + j + lead});
      sx += v * i, sy += v * j, total += v;
    }
  const Point2 expected{(pc + lead + sx / total) * 4 + 1.5, (pr + lead + sy / total) * 4 + 1.5};
  EXPECT_NEAR(result.refined_center.x, expected.x, 1e-9);
  EXPECT_NEAR(result.refined_center.y, expected.y, 1e-9);
  EXPECT_EQ(result.confidence, best);
}

TEST(Detector, DirectEvaluationCountOnFullFrame) {
  const auto m = nn::random_model(nn::ConfigName::SK8P8, 2);
  const auto res = detect_direct(random_image(384, 288, 3), m);
  // 96x72 downscaled, 72x48 window positions, every second one scanned.
  EXPECT_EQ(res.stats.coarse_evaluations, 36u * 24u);
  EXPECT_LE(res.stats.fine_evaluations, 81u);
  EXPECT_FALSE(res.fine_center.has_value());
}

TEST(Detector, TwoStageCountsAndModelChecks) {
  const auto coarse = nn::random_model(nn::ConfigName::CK8P8, 4);
  const auto fine = nn::random_model(nn::ConfigName::Fine, 5);
  const auto img = random_image(200, 160, 6);
  const auto res = detect_two_stage(img, coarse, fine);
  EXPECT_EQ(res.stats.fine_evaluations, 441u);
  EXPECT_EQ(res.stats.coarse_evaluations, static_cast<std::size_t>((50 - 23) * (40 - 23)));
  ASSERT_TRUE(res.fine_center.has_value());
  EXPECT_LE(std::abs(res.refined_center.x - res.fine_center->x), 3.0);

  TwoStageSettings strided;
  strided.fine_stride = 2;
  strided.radius = 24;
  const auto s = detect_two_stage(img, coarse, fine, strided);
  EXPECT_EQ(s.stats.fine_evaluations, 625u);
  EXPECT_EQ(s.refined_center, *s.fine_center);

  EXPECT_THROW(detect_two_stage(img, fine, fine), std::invalid_argument);
  EXPECT_THROW(detect_direct(img, coarse), std::invalid_argument);
}
