#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pupilnet/io/manifest.hpp"
#include "pupilnet/io/synthetic.hpp"

using namespace pupilnet;
using namespace pupilnet::io;
namespace fs = std::filesystem;

namespace {

SyntheticParams clean() {
  SyntheticParams p;
  p.reflections_min = 0;
  p.reflections_max = 0;
  p.noise_sigma = 0.0;
  p.illumination_gradient = 0.0;
  return p;
}

EyeGeometry centered_at(Point2 c) {
  EyeGeometry g;
  g.pupil_center = c;
  g.pupil_major = 18.0;
  g.pupil_minor = 13.0;
  g.pupil_angle = 0.6;
  g.iris_center = {c.x + 4.0, c.y - 3.0};
  g.iris_radius = 50.0;
  return g;
}

Point2 dark_centroid(const GrayImage& img, double threshold) {
  double sx = 0.0, sy = 0.0, n = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) < threshold) {
        sx += x;
        sy += y;
        n += 1.0;
      }
  return {sx / n, sy / n};
}

}  // namespace

TEST(Synthetic, SameSeedSameFrames) {
  auto p = SyntheticParams{};
  p.seed = 77;
  const auto a = synth_generate(p, 4);
  const auto b = synth_generate(p, 4);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].pupil, b[i].pupil);
    EXPECT_EQ(a[i].frame_index, i);
  }
  p.seed = 78;
  EXPECT_NE(synth_generate(p, 1)[0].image, a[0].image);
}

TEST(Synthetic, FramePrefixIsStable) {
  const auto p = SyntheticParams{};
  const auto three = synth_generate(p, 3);
  const auto one = synth_generate(p, 1);
  EXPECT_EQ(three[0].image, one[0].image);
  EXPECT_TRUE(synth_generate(p, 0).empty());
}

TEST(Synthetic, LabelIsDarkRegionCentroid) {
  const auto p = clean();
  for (Point2 c : {Point2{100.0, 100.0}, Point2{231.3, 140.7}}) {
    const auto img = render_eye(p, centered_at(c), 1);
    const Point2 m = dark_centroid(img, (p.pupil_intensity + p.iris_intensity) / 2.0);
    EXPECT_NEAR(m.x, c.x, 1.0);
    EXPECT_NEAR(m.y, c.y, 1.0);
  }
}

TEST(Synthetic, PupilDarkerThanSurroundings) {
  auto p = SyntheticParams{};
  p.seed = 5;
  p.reflections_max = 0;  // a glint may sit on the center
  for (const auto& f : synth_generate(p, 10)) {
    const auto c = round_to_pixel(f.pupil);
    ASSERT_GE(c.x, 0);
    ASSERT_LT(c.x, f.image.width);
    EXPECT_LT(f.image.at(c.x, c.y), 90);
    EXPECT_GE(f.pupil.x, p.border_margin);
    EXPECT_LE(f.pupil.x, p.width - 1 - p.border_margin);
    EXPECT_GE(f.pupil.y, p.border_margin);
    EXPECT_LE(f.pupil.y, p.height - 1 - p.border_margin);
  }
}

TEST(Synthetic, GeometryRespectsRanges) {
  const auto p = SyntheticParams{};
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto g = sample_geometry(p, rng);
    EXPECT_GE(g.pupil_minor, p.pupil_radius_min);
    EXPECT_LE(g.pupil_major, p.pupil_radius_max);
    EXPECT_LE(g.pupil_minor, g.pupil_major);
    EXPECT_GE(g.iris_radius, p.iris_radius_min);
    EXPECT_LE(g.iris_radius, p.iris_radius_max);
    EXPECT_LE(static_cast<int>(g.reflections.size()), p.reflections_max);
    const double dx = g.pupil_center.x - g.iris_center.x;
    const double dy = g.pupil_center.y - g.iris_center.y;
    EXPECT_LE(std::hypot(dx, dy) + g.pupil_major, g.iris_radius + 1e-9);
    EXPECT_TRUE(inside_pupil(g, g.pupil_center.x, g.pupil_center.y));
  }
}

TEST(Synthetic, RejectsInfeasibleParameters) {
  auto p = SyntheticParams{};
  p.pupil_radius_max = 5.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = SyntheticParams{};
  p.pupil_intensity = 200.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = SyntheticParams{};
  p.border_margin = 200.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = SyntheticParams{};
  p.reflections_min = 4;
  EXPECT_THROW(validate(p), std::invalid_argument);
  EXPECT_NO_THROW(validate(SyntheticParams{}));
}

TEST(Synthetic, WrittenDatasetLoadsBack) {
  const auto dir = fs::temp_directory_path() / "pupilnet_synth_written";
  fs::remove_all(dir);
  auto p = SyntheticParams{};
  p.dataset_id = "written";
  const auto frames = synth_generate(p, 3);
  write_synthetic_dataset(frames, dir);
  const auto m = load_manifest(dir / "manifest.csv");
  ASSERT_EQ(m.frames.size(), 3u);
  const auto ds = load_dataset(m);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ds.frames[i].image, frames[i].image);
    EXPECT_EQ(ds.frames[i].pupil, frames[i].pupil);
  }
  fs::remove_all(dir);
}
