#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pupilnet/eval/eval.hpp"
#include "pupilnet/io/synthetic.hpp"

using namespace pupilnet;
using namespace pupilnet::eval;

namespace {

Dataset synthetic_dataset(const std::string& id, std::size_t count, std::uint64_t seed) {
  io::SyntheticParams p;
  p.dataset_id = id;
  p.seed = seed;
  return {id, io::synth_generate(p, count)};
}

trainer::TrainingConfig tiny_training() {
  auto c = trainer::TrainingConfig::defaults(nn::ConfigName::SK8P8);
  c.rounds.resize(1);
  c.rounds[0].epochs = 2;
  c.rounds[0].batch_size = 50;
  c.rounds[0].set_size_target = 150;
  c.fine_tune_epochs = 1;
  c.validation_fraction = 0.2;
  return c;
}

// Detector that answers a fixed offset from the frame's stored label.
Method offset_method(double dx, double dy, const std::vector<LabeledFrame>& frames) {
  return {"offset", [=](const GrayImage& img) {
            for (const auto& f : frames)
              if (f.image == img) return Point2{f.pupil.x + dx, f.pupil.y + dy};
            return Point2{};
          }};
}

}  // namespace

TEST(Eval, PixelError) {
  EXPECT_DOUBLE_EQ(pixel_error({3.0, 4.0}, {0.0, 0.0}), 5.0);
  EXPECT_DOUBLE_EQ(pixel_error({1.5, -2.0}, {1.5, -2.0}), 0.0);
  EXPECT_DOUBLE_EQ(pixel_error({0.0, 0.0}, {3.0, 4.0}), 5.0);
}

TEST(Eval, InclusiveThresholds) {
  const std::vector<double> e = {1.0, 4.9, 5.1, 12.0};
  const auto c = detection_curve(e);
  EXPECT_DOUBLE_EQ(c.rate_at(5), 0.5);
  EXPECT_DOUBLE_EQ(c.rate_at(0), 0.0);
  EXPECT_DOUBLE_EQ(c.rate_at(1), 0.25);
  EXPECT_DOUBLE_EQ(c.rate_at(12), 1.0);
  EXPECT_DOUBLE_EQ(c.rate_at(11), 0.75);
  EXPECT_EQ(c.frame_count, 4u);
  const std::vector<double> boundary = {5.0};
  EXPECT_DOUBLE_EQ(detection_curve(boundary).rate_at(5), 1.0);
  EXPECT_THROW(detection_curve(std::span<const double>{}), std::invalid_argument);
}

TEST(Eval, CurveIsMonotone) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> d(0.2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> e(1 + trial * 3);
    for (auto& v : e) v = d(rng);
    const auto c = detection_curve(e);
    for (int t = 1; t <= kMaxThreshold; ++t) EXPECT_GE(c.rate_at(t), c.rate_at(t - 1));
    for (double r : c.rates) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(Eval, EqualDatasetWeights) {
  DetectionCurve a, b;
  a.rates.fill(0.4);
  a.frame_count = 10;
  b.rates.fill(0.8);
  b.frame_count = 1000;
  const std::vector<DetectionCurve> both = {a, b};
  const auto avg = average_over_datasets(both);
  EXPECT_DOUBLE_EQ(avg.rate_at(5), 0.6);
  EXPECT_EQ(avg.frame_count, 1010u);
}

TEST(Eval, AverageInvariantToDuplicatingFrames) {
  const std::vector<double> e1 = {1.0, 7.0, 3.0};
  const std::vector<double> e2 = {2.0, 9.5};
  std::vector<double> e1x3;
  for (int i = 0; i < 3; ++i) e1x3.insert(e1x3.end(), e1.begin(), e1.end());
  const std::vector<DetectionCurve> once = {detection_curve(e1), detection_curve(e2)};
  const std::vector<DetectionCurve> tripled = {detection_curve(e1x3), detection_curve(e2)};
  EXPECT_EQ(average_over_datasets(once).rates, average_over_datasets(tripled).rates);
}

TEST(Eval, FramesAndSummary) {
  const auto ds = synthetic_dataset("s", 4, 3);
  const auto records = evaluate_frames(ds.frames, offset_method(3.0, 4.0, ds.frames), 1, false);
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_NEAR(r.euclidean_error, 5.0, 1e-12);
    EXPECT_EQ(r.latency_s, 0.0);
    EXPECT_EQ(r.dataset_id, "s");
  }
  const auto row = summarize("s", "offset", records);
  EXPECT_DOUBLE_EQ(row.curve.rate_at(5), 1.0);
  EXPECT_DOUBLE_EQ(row.curve.rate_at(4), 0.0);
  const auto timed = evaluate_frames(ds.frames, offset_method(0, 0, ds.frames), 2, true);
  for (const auto& r : timed) EXPECT_GT(r.latency_s, 0.0);
}

TEST(Eval, ReportLayout) {
  EvaluationTable t;
  DetectionCurve c1, c2;
  c1.rates.fill(0.5);
  c1.frame_count = 2;
  c2.rates.fill(1.0);
  c2.frame_count = 3;
  t.rows = {{"a", "SK8P8", c1, 0.25}, {"b", "SK8P8", c2, 0.75}};
  std::ostringstream summary, curves;
  emit_report(t, summary, curves);
  EXPECT_EQ(summary.str(),
            "dataset,method,rate_at_5px,mean_latency_s,frames\n"
            "a,SK8P8,0.5,0.25,2\n"
            "b,SK8P8,1,0.75,3\n"
            "average,SK8P8,0.75,0.5,5\n");
  std::istringstream in(curves.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "dataset,method,threshold,rate");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3 * (kMaxThreshold + 1));

  t.rows.pop_back();
  std::ostringstream s1, c1s;
  emit_report(t, s1, c1s);
  EXPECT_EQ(s1.str().find("average"), std::string::npos);
}

TEST(Eval, MethodNames) {
  const auto sk = nn::init_model(nn::build_config(nn::ConfigName::SK8P8), 1);
  const auto ck = nn::init_model(nn::build_config(nn::ConfigName::CK8P16), 1);
  const auto fine = nn::init_model(nn::build_config(nn::ConfigName::Fine), 1);
  EXPECT_EQ(direct_method(sk).name, "SK8P8");
  EXPECT_EQ(coarse_method(ck).name, "CK8P16");
  EXPECT_EQ(two_stage_method(ck, fine, two_stage_settings_for(ck.config)).name, "F_CK8P16");
  EXPECT_THROW(coarse_method(fine), std::invalid_argument);
  EXPECT_EQ(two_stage_settings_for(nn::ConfigName::SK8P8).radius, 10);
  EXPECT_EQ(two_stage_settings_for(nn::ConfigName::SK8P8).fine_stride, 1);
  EXPECT_EQ(two_stage_settings_for(nn::ConfigName::CK8P8).radius, 24);
  EXPECT_EQ(two_stage_settings_for(nn::ConfigName::CK8P8).fine_stride, 2);
}

TEST(Eval, CrossValidationNeverTrainsOnHeldOut) {
  const std::vector<Dataset> ds = {synthetic_dataset("a", 10, 1), synthetic_dataset("b", 12, 2),
                                   synthetic_dataset("c", 8, 3)};
  CrossValidationOptions o;
  o.training = tiny_training();
  o.measure_latency = false;
  const auto r = cross_validate(ds, o);
  ASSERT_EQ(r.folds.size(), 3u);
  ASSERT_EQ(r.table.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& fold = r.folds[i];
    EXPECT_EQ(fold.held_out, ds[i].id);
    std::size_t expected = 0;
    for (std::size_t d = 0; d < 3; ++d)
      if (d != i) expected += ds[d].frames.size();
    EXPECT_EQ(fold.training_frames.size(), expected);
    for (const auto& k : fold.training_frames) EXPECT_NE(k.dataset_id, fold.held_out);
    EXPECT_EQ(r.table.rows[i].dataset, ds[i].id);
    EXPECT_EQ(r.table.rows[i].method, "SK8P8");
    EXPECT_EQ(r.table.rows[i].curve.frame_count, ds[i].frames.size());
  }

  const auto again = cross_validate(ds, o);
  std::ostringstream s1, c1, s2, c2;
  emit_report(r.table, s1, c1);
  emit_report(again.table, s2, c2);
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_EQ(c1.str(), c2.str());
}

TEST(Eval, CrossValidationRejectsBadInput) {
  CrossValidationOptions o;
  o.training = tiny_training();
  const std::vector<Dataset> one = {synthetic_dataset("a", 10, 1)};
  EXPECT_THROW(cross_validate(one, o), std::invalid_argument);
  const std::vector<Dataset> dup = {synthetic_dataset("a", 10, 1), synthetic_dataset("a", 10, 2)};
  EXPECT_THROW(cross_validate(dup, o), std::invalid_argument);
}
