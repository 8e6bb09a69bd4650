#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pupilnet/dataset.hpp"
#include "pupilnet/detector/detector.hpp"
#include "pupilnet/geometry.hpp"
#include "pupilnet/nn/network.hpp"
#include "pupilnet/trainer/trainer.hpp"

namespace pupilnet::eval {

struct ErrorRecord {
  std::string dataset_id;
  std::size_t frame_index = 0;
  Point2 predicted;
  Point2 truth;
  double euclidean_error = 0.0;
  double latency_s = 0.0;
};

/// Euclidean distance in full-resolution pixels.
double pixel_error(Point2 predicted, Point2 truth);

/// Integer thresholds 0..15 px.
inline constexpr int kMaxThreshold = 15;
inline constexpr int kReportThreshold = 5;

struct DetectionCurve {
  std::array<double, kMaxThreshold + 1> rates{};
  std::size_t frame_count = 0;

  double rate_at(int threshold) const { return rates.at(static_cast<std::size_t>(threshold)); }
};

/// rate(t) = |{e : e <= t}| / n. Throws std::invalid_argument on an empty list.
DetectionCurve detection_curve(std::span<const double> errors);
DetectionCurve detection_curve(std::span<const ErrorRecord> records);

/// Unweighted mean of the per-dataset rates; frame_count is the total.
DetectionCurve average_over_datasets(std::span<const DetectionCurve> curves);

/// A named detection pipeline mapping a full-resolution image to a pupil center.
struct Method {
  std::string name;
  std::function<Point2(const GrayImage&)> detect;
};

/// SK8P8 single-stage detection with subpixel refinement.
Method direct_method(const nn::NetworkModel& model, const detector::DirectSettings& settings = {});
/// Maximum of the stride-1 coarse response map, upsampled to full resolution.
Method coarse_method(const nn::NetworkModel& model, int downscale_factor = 4);
/// Coarse scan plus fine search, named "F_<coarse config>".
Method two_stage_method(const nn::NetworkModel& coarse, const nn::NetworkModel& fine,
                        const detector::TwoStageSettings& settings);
/// Search settings used for a given coarse network: 21x21 per-pixel fine
/// region behind SK8P8, 49x49 at every second position behind the CK nets.
detector::TwoStageSettings two_stage_settings_for(nn::ConfigName coarse);

/// Runs `method` on every frame. Latency is wall-clock per detect call when
/// `measure_latency` is set, otherwise 0 so reports stay reproducible.
std::vector<ErrorRecord> evaluate_frames(std::span<const LabeledFrame> frames, const Method& method, int threads = 1,
                                         bool measure_latency = true);

struct ReportRow {
  std::string dataset;
  std::string method;
  DetectionCurve curve;
  double mean_latency_s = 0.0;
};

/// One row per (dataset, method) in evaluation order.
struct EvaluationTable {
  std::vector<ReportRow> rows;
};

ReportRow summarize(const std::string& dataset, const std::string& method, std::span<const ErrorRecord> records);

/// Fixed-model evaluation of several methods on several datasets.
EvaluationTable evaluate_datasets(const std::vector<Dataset>& datasets, const std::vector<Method>& methods,
                                  int threads = 1, bool measure_latency = true);

struct CrossValidationOptions {
  trainer::TrainingConfig training;  // target_config selects the evaluated network
  bool with_fine = false;            // also train FINE and evaluate the two-stage method
  trainer::TrainingConfig fine_training = trainer::TrainingConfig::defaults(nn::ConfigName::Fine);
  int threads = 1;
  bool measure_latency = true;
  trainer::ProgressCallback progress;
};

struct Fold {
  std::string held_out;
  std::vector<FrameKey> training_frames;  // every frame offered to the trainer
};

struct CrossValidationResult {
  EvaluationTable table;
  std::vector<Fold> folds;
};

/// Leave-one-dataset-out: for each dataset, trains on all others and
/// evaluates every frame of the held-out one. Requires >= 2 datasets with
/// distinct ids.
CrossValidationResult cross_validate(const std::vector<Dataset>& datasets, const CrossValidationOptions& options);

/// Summary CSV `dataset,method,rate_at_5px,mean_latency_s,frames` and curve
/// CSV `dataset,method,threshold,rate`. With two or more datasets an
/// "average" group (equal dataset weights) is appended per method.
void emit_report(const EvaluationTable& table, std::ostream& summary, std::ostream& curves);
void emit_report(const EvaluationTable& table, const std::filesystem::path& summary_path,
                 const std::filesystem::path& curve_path);

}  // namespace pupilnet::eval
