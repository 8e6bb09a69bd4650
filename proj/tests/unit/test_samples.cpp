#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <utility>

#include "pupilnet/detector/detector.hpp"
#include "pupilnet/detector/resample.hpp"
#include "pupilnet/io/synthetic.hpp"
#include "pupilnet/trainer/samples.hpp"

using namespace pupilnet;
using namespace pupilnet::trainer;

namespace {

using Offset = std::pair<int, int>;

// Independent enumeration: walk the whole square, keep diagonal cells, split
// by the chessboard distance, then thin the invalid cells of each diagonal.
std::set<Offset> diagonal_oracle(int reach, bool both_diagonals, bool valid, int phase = 0) {
  std::set<Offset> out;
  for (int sign : both_diagonals ? std::vector<int>{1, -1} : std::vector<int>{1}) {
    std::vector<Offset> invalid;
    for (int y = -reach; y <= reach; ++y)
      for (int x = -reach; x <= reach; ++x) {
        if (y != sign * x) continue;
        const bool is_valid = std::max(std::abs(x), std::abs(y)) <= 1;
        if (is_valid && valid) out.insert({x, y});
        if (!is_valid) invalid.push_back({x, y});
      }
    std::sort(invalid.begin(), invalid.end());
    if (!valid)
      for (std::size_t i = static_cast<std::size_t>(phase); i < invalid.size(); i += 2) out.insert(invalid[i]);
  }
  return out;
}

std::set<Offset> collect(const std::vector<SampleOffset>& offsets, float label) {
  std::set<Offset> out;
  for (const auto& o : offsets)
    if (o.label == label) out.insert({o.dx, o.dy});
  return out;
}

std::size_t count_label(const std::vector<SampleOffset>& offsets, float label) {
  return std::count_if(offsets.begin(), offsets.end(), [&](const auto& o) { return o.label == label; });
}

LabeledFrame frame_at(Point2 pupil, int w = 384, int h = 288) {
  LabeledFrame f;
  f.image = GrayImage(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.image.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 251);
  f.pupil = pupil;
  f.dataset_id = "d";
  f.frame_index = 3;
  return f;
}

}  // namespace

TEST(Samples, CoarseOffsetCounts) {
  const auto r1 = coarse_offsets(1);
  EXPECT_EQ(count_label(r1, 1.0f), 3u);
  EXPECT_EQ(count_label(r1, 0.0f), 5u);
  const auto r2 = coarse_offsets(2);
  EXPECT_EQ(count_label(r2, 1.0f), 3u);
  EXPECT_EQ(count_label(r2, 0.0f), 11u);
  EXPECT_EQ(coarse_offsets(4), r2);
  EXPECT_THROW(coarse_offsets(0), std::invalid_argument);
}

TEST(Samples, CoarseOffsetsMatchEnumeration) {
  for (int phase : {0, 1})
    for (int round : {1, 2, 3}) {
      const int reach = round == 1 ? 6 : 12;
      const auto got = coarse_offsets(round, phase);
      EXPECT_EQ(collect(got, 1.0f), diagonal_oracle(reach, false, true));
      EXPECT_EQ(collect(got, 0.0f), diagonal_oracle(reach, false, false, phase));
      EXPECT_EQ(collect(got, 1.0f).size() + collect(got, 0.0f).size(), got.size()) << "duplicates";
    }
  EXPECT_THROW(coarse_offsets(2, 2), std::invalid_argument);
}

TEST(Samples, PhasesTogetherAreSymmetric) {
  // The nearest negatives alternate sides: (-2, -2) in one phase, (2, 2) in the other.
  const auto even = collect(coarse_offsets(2, 0), 0.0f);
  const auto odd = collect(coarse_offsets(2, 1), 0.0f);
  EXPECT_EQ(even.size(), odd.size());
  EXPECT_TRUE(even.count({-2, -2}));
  EXPECT_TRUE(odd.count({2, 2}));
  std::set<Offset> both(even.begin(), even.end());
  both.insert(odd.begin(), odd.end());
  for (const auto& [x, y] : both) EXPECT_TRUE(both.count({-x, -y}));
  EXPECT_EQ(thinning_phase(LabeledFrame{{}, {}, "d", 7}), 1);
}

TEST(Samples, DirectOffsetsCoverBothDiagonals) {
  const auto r2 = direct_offsets(2);
  EXPECT_EQ(count_label(r2, 1.0f), 5u);
  EXPECT_EQ(count_label(r2, 0.0f), 22u);
  const auto r1 = direct_offsets(1);
  EXPECT_EQ(count_label(r1, 1.0f), 5u);
  EXPECT_EQ(count_label(r1, 0.0f), 10u);
  for (int round : {1, 2}) {
    const int reach = round == 1 ? 6 : 12;
    const auto got = direct_offsets(round, 1);
    EXPECT_EQ(count_label(got, 0.0f), round == 1 ? 10u : 22u);
    EXPECT_EQ(collect(got, 1.0f), diagonal_oracle(reach, true, true));
    EXPECT_EQ(collect(got, 0.0f), diagonal_oracle(reach, true, false, 1));
    EXPECT_EQ(std::count(got.begin(), got.end(), SampleOffset{0, 0, 1.0f}), 1);
  }
  // Both diagonals before thinning: 2 * 25 - 1 cells.
  std::set<Offset> all;
  for (int d = -12; d <= 12; ++d) {
    all.insert({d, d});
    all.insert({d, -d});
  }
  EXPECT_EQ(all.size(), 49u);
}

TEST(Samples, FineOffsets) {
  const auto f = fine_offsets();
  EXPECT_EQ(count_label(f, 1.0f), 7u);
  EXPECT_EQ(count_label(f, 0.0f), 14u);
  for (const auto& o : f) {
    EXPECT_EQ(o.dx, o.dy);
    if (o.label == 1.0f) {
      EXPECT_LE(std::abs(o.dx), 3);
    }
    if (o.label == 0.0f) {
      EXPECT_GE(std::abs(o.dx), 6);
      EXPECT_EQ(std::abs(o.dx) % 3, 0);
    }
  }
}

TEST(Samples, FineSamplesAreBalanced) {
  const auto f = frame_at({190.0, 140.0});
  GenerationStats stats;
  const auto s = gen_fine_samples(f, &stats);
  ASSERT_EQ(s.size(), 28u);
  EXPECT_EQ(std::count_if(s.begin(), s.end(), [](const auto& x) { return x.label == 1.0f; }), 14);
  EXPECT_EQ(stats.frames_used, 1u);
  EXPECT_EQ(stats.samples, 28u);
  for (const auto& x : s) {
    EXPECT_EQ(x.size, 89);
    EXPECT_EQ(x.pixels.size(), 89u * 89u);
    const PixelPos c{190 + x.source.dx, 140 + x.source.dy};
    EXPECT_EQ(x.pixels, detector::extract_patch_pixels(f.image, c, 89));
  }
}

TEST(Samples, PatchesComeFromDownscaledImage) {
  const auto f = frame_at({201.0, 143.0});
  const auto ds = detector::downscale_bicubic(f.image, 4);
  const auto base = round_to_pixel(detector::downsample_position(f.pupil, 4));
  for (int round : {1, 2}) {
    const auto coarse = gen_coarse_samples(f, round);
    EXPECT_EQ(coarse.size(), round == 1 ? 8u : 14u);
    for (const auto& x : coarse) {
      EXPECT_EQ(x.size, 24);
      EXPECT_EQ(x.label == 1.0f, std::max(std::abs(x.source.dx), std::abs(x.source.dy)) <= 1);
      EXPECT_EQ(x.pixels, detector::extract_patch_pixels(ds, {base.x + x.source.dx, base.y + x.source.dy}, 24));
      EXPECT_EQ(x.source.dataset_id, "d");
      EXPECT_EQ(x.source.frame_index, 3u);
    }
    std::set<Offset> used;
    for (const auto& x : coarse) used.insert({x.source.dx, x.source.dy});
    std::set<Offset> expected;
    for (const auto& o : coarse_offsets(round, 1)) expected.insert({o.dx, o.dy});
    EXPECT_EQ(used, expected);
    const auto direct = gen_direct_samples(f, round);
    EXPECT_EQ(direct.size(), round == 1 ? 15u : 27u);
    for (const auto& x : direct) EXPECT_EQ(x.size, 25);
  }
}

TEST(Samples, BorderHandling) {
  GenerationStats stats;
  // Valid window would leave the image: the frame is skipped.
  EXPECT_TRUE(gen_fine_samples(frame_at({30.0, 140.0}), &stats).empty());
  EXPECT_EQ(stats.frames_skipped, 1u);
  EXPECT_EQ(stats.frames_used, 0u);

  // Valid windows fit but far invalid ones do not: those are dropped.
  GenerationStats partial;
  const auto s = gen_fine_samples(frame_at({50.0, 140.0}), &partial);
  ASSERT_FALSE(s.empty());
  EXPECT_GT(partial.invalid_dropped, 0u);
  const auto invalid = std::count_if(s.begin(), s.end(), [](const auto& x) { return x.label == 0.0f; });
  EXPECT_EQ(static_cast<std::size_t>(invalid), 14u - partial.invalid_dropped);
  EXPECT_EQ(static_cast<std::size_t>(s.size() - invalid), std::max<std::size_t>(7, invalid));
}

TEST(Samples, WindowFitIsExact) {
  // 89 wide, lead 44: center 44 is the leftmost fit when |d| <= 3 must fit.
  const auto fits = gen_fine_samples(frame_at({47.0, 140.0}));
  EXPECT_FALSE(fits.empty());
  EXPECT_TRUE(gen_fine_samples(frame_at({46.0, 140.0})).empty());
  // Right edge: left + 89 <= 384 gives center <= 339, so label + 3 <= 339.
  EXPECT_FALSE(gen_fine_samples(frame_at({336.0, 140.0})).empty());
  EXPECT_TRUE(gen_fine_samples(frame_at({337.0, 140.0})).empty());
}

TEST(Samples, TensorIsNormalized) {
  const auto s = gen_coarse_samples(frame_at({190.0, 140.0}), 1);
  const auto t = s[0].to_tensor();
  for (std::size_t i = 0; i < s[0].pixels.size(); ++i) EXPECT_FLOAT_EQ(t.values[i], s[0].pixels[i] / 255.0f);
}

TEST(Samples, KindPerConfig) {
  EXPECT_EQ(sample_kind_for(nn::ConfigName::CK8P16), SampleKind::Coarse);
  EXPECT_EQ(sample_kind_for(nn::ConfigName::Fine), SampleKind::Fine);
  EXPECT_EQ(sample_kind_for(nn::ConfigName::SK8P8), SampleKind::Direct);
  EXPECT_EQ(patch_size_for(SampleKind::Direct), 25);
}
