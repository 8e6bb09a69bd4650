#include "pupilnet/eval/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <stdexcept>

#include "pupilnet/detector/resample.hpp"
#include "pupilnet/parallel.hpp"

namespace pupilnet::eval {

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double pixel_error(Point2 predicted, Point2 truth) { return std::hypot(predicted.x - truth.x, predicted.y - truth.y); }

DetectionCurve detection_curve(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("detection_curve: no errors given");
  DetectionCurve curve;
  curve.frame_count = errors.size();
  for (int t = 0; t <= kMaxThreshold; ++t) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    curve.rates[static_cast<std::size_t>(t)] = static_cast<double>(hits) / static_cast<double>(errors.size());
  }
  return curve;
}

DetectionCurve detection_curve(std::span<const ErrorRecord> records) {
  std::vector<double> errors;
  errors.reserve(records.size());
  for (const auto& r : records) errors.push_back(r.euclidean_error);
  return detection_curve(errors);
}

DetectionCurve average_over_datasets(std::span<const DetectionCurve> curves) {
  if (curves.empty()) throw std::invalid_argument("average_over_datasets: no curves given");
  DetectionCurve out;
  for (const auto& c : curves) {
    out.frame_count += c.frame_count;
    for (std::size_t t = 0; t < out.rates.size(); ++t) out.rates[t] += c.rates[t];
  }
  for (double& r : out.rates) r /= static_cast<double>(curves.size());
  return out;
}

Method direct_method(const nn::NetworkModel& model, const detector::DirectSettings& settings) {
  auto m = std::make_shared<const nn::NetworkModel>(model);
  return {std::string(nn::to_string(model.config)),
          [m, settings](const GrayImage& image) { return detector::detect_direct(image, *m, settings).refined_center; }};
}

Method coarse_method(const nn::NetworkModel& model, int downscale_factor) {
  if (model.config == nn::ConfigName::Fine) throw std::invalid_argument("coarse_method: FINE is not a coarse network");
  auto m = std::make_shared<const nn::NetworkModel>(model);
  return {std::string(nn::to_string(model.config)), [m, downscale_factor](const GrayImage& image) {
            const auto ds = detector::downscale_bicubic(image, downscale_factor);
            const auto peak = detector::argmax_response(detector::coarse_response_map(ds, *m, 1));
            return detector::upsample_position(peak.position.to_point(), downscale_factor);
          }};
}

Method two_stage_method(const nn::NetworkModel& coarse, const nn::NetworkModel& fine,
                        const detector::TwoStageSettings& settings) {
  auto c = std::make_shared<const nn::NetworkModel>(coarse);
  auto f = std::make_shared<const nn::NetworkModel>(fine);
  return {"F_" + std::string(nn::to_string(coarse.config)), [c, f, settings](const GrayImage& image) {
            return detector::detect_two_stage(image, *c, *f, settings).refined_center;
          }};
}

detector::TwoStageSettings two_stage_settings_for(nn::ConfigName coarse) {
  detector::TwoStageSettings s;
  if (coarse == nn::ConfigName::SK8P8) {
    s.radius = 10;
    s.fine_stride = 1;
  } else {
    s.radius = 24;
    s.fine_stride = 2;
  }
  return s;
}

std::vector<ErrorRecord> evaluate_frames(std::span<const LabeledFrame> frames, const Method& method, int threads,
                                         bool measure_latency) {
  std::vector<ErrorRecord> out(frames.size());
  parallel_for(frames.size(), threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const Point2 p = method.detect(frames[i].image);
    const auto stop = std::chrono::steady_clock::now();
    ErrorRecord& r = out[i];
    r.dataset_id = frames[i].dataset_id;
    r.frame_index = frames[i].frame_index;
    r.predicted = p;
    r.truth = frames[i].pupil;
    r.euclidean_error = pixel_error(p, frames[i].pupil);
    r.latency_s = measure_latency ? std::chrono::duration<double>(stop - start).count() : 0.0;
  });
  return out;
}

ReportRow summarize(const std::string& dataset, const std::string& method, std::span<const ErrorRecord> records) {
  ReportRow row{dataset, method, detection_curve(records), 0.0};
  double total = 0.0;
  for (const auto& r : records) total += r.latency_s;
  row.mean_latency_s = total / static_cast<double>(records.size());
  return row;
}

EvaluationTable evaluate_datasets(const std::vector<Dataset>& datasets, const std::vector<Method>& methods, int threads,
                                  bool measure_latency) {
  EvaluationTable table;
  for (const auto& d : datasets) {
    if (d.frames.empty()) throw std::invalid_argument("evaluate_datasets: dataset '" + d.id + "' is empty");
    for (const auto& m : methods)
      table.rows.push_back(summarize(d.id, m.name, evaluate_frames(d.frames, m, threads, measure_latency)));
  }
  return table;
}

CrossValidationResult cross_validate(const std::vector<Dataset>& datasets, const CrossValidationOptions& options) {
  if (datasets.size() < 2) throw std::invalid_argument("cross_validate: at least two datasets are required");
  std::set<std::string> ids;
  for (const auto& d : datasets)
    if (!ids.insert(d.id).second) throw std::invalid_argument("cross_validate: duplicate dataset id '" + d.id + "'");
  const nn::ConfigName config = options.training.target_config;
  if (config == nn::ConfigName::Fine) throw std::invalid_argument("cross_validate: FINE needs a coarse network; set with_fine on a coarse config instead");

  CrossValidationResult result;
  for (std::size_t held = 0; held < datasets.size(); ++held) {
    std::vector<Dataset> pool;
    Fold fold{datasets[held].id, {}};
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      if (d == held) continue;
      pool.push_back(datasets[d]);
      for (const auto& f : datasets[d].frames) fold.training_frames.push_back({f.dataset_id, f.frame_index});
    }
    const auto trained = trainer::train_rounds(nn::build_config(config), pool, options.training, options.progress);
    std::vector<Method> methods;
    if (config == nn::ConfigName::SK8P8) {
      methods.push_back(direct_method(trained.model));
    } else {
      methods.push_back(coarse_method(trained.model));
    }
    if (options.with_fine) {
      const auto fine =
          trainer::train_rounds(nn::build_config(nn::ConfigName::Fine), pool, options.fine_training, options.progress);
      methods.push_back(two_stage_method(trained.model, fine.model, two_stage_settings_for(config)));
    }
    const std::vector<Dataset> target{datasets[held]};
    auto table = evaluate_datasets(target, methods, options.threads, options.measure_latency);
    for (auto& row : table.rows) result.table.rows.push_back(std::move(row));
    result.folds.push_back(std::move(fold));
  }
  return result;
}

void emit_report(const EvaluationTable& table, std::ostream& summary, std::ostream& curves) {
  summary << "dataset,method,rate_at_5px,mean_latency_s,frames\n";
  curves << "dataset,method,threshold,rate\n";
  auto write = [&](const ReportRow& r) {
    summary << r.dataset << ',' << r.method << ',' << format_number(r.curve.rate_at(kReportThreshold)) << ','
            << format_number(r.mean_latency_s) << ',' << r.curve.frame_count << '\n';
    for (int t = 0; t <= kMaxThreshold; ++t)
      curves << r.dataset << ',' << r.method << ',' << t << ',' << format_number(r.curve.rate_at(t)) << '\n';
  };
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  for (const auto& r : table.rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    write(r);
  }
  if (datasets.size() < 2) return;
  for (const auto& m : methods) {
    std::vector<DetectionCurve> group;
    double latency = 0.0;
    for (const auto& r : table.rows)
      if (r.method == m) {
        group.push_back(r.curve);
        latency += r.mean_latency_s;
      }
    if (group.size() < 2) continue;
    write({"average", m, average_over_datasets(group), latency / static_cast<double>(group.size())});
  }
}

void emit_report(const EvaluationTable& table, const std::filesystem::path& summary_path,
                 const std::filesystem::path& curve_path) {
  std::ofstream summary(summary_path, std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write report '" + summary_path.string() + "'");
  std::ofstream curves(curve_path, std::ios::binary);
  if (!curves) throw std::runtime_error("cannot write report '" + curve_path.string() + "'");
  emit_report(table, summary, curves);
  if (!summary || !curves) throw std::runtime_error("failed writing report files");
}

}  // namespace pupilnet::eval
