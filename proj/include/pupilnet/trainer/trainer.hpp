#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pupilnet/dataset.hpp"
#include "pupilnet/nn/network.hpp"
#include "pupilnet/trainer/samples.hpp"

namespace pupilnet::trainer {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RoundSchedule {
  int round_index = 1;
  float start_lr = 0.1f;
  int epochs = 50;
  int lr_drop_every = 10;
  float lr_drop_factor = 0.1f;
  float lr_floor = 1e-6f;
  int batch_size = 100;
  std::size_t set_size_target = 20000;

  /// max(start_lr * drop^floor((epoch - 1) / drop_every), floor), epoch 1-based.
  float effective_lr(int epoch) const;
};

/// Round r starts at 10^-r; round 1 targets 20,000 samples, later rounds 40,000.
RoundSchedule default_round(int round_index);

/// How a batch's per-sample gradients form the update. With Sum the
/// learning rate multiplies the summed gradient (lr * batch size on the
/// mean); with Mean it multiplies the mean directly.
enum class GradientReduction { Sum, Mean };

struct TrainingConfig {
  nn::ConfigName target_config = nn::ConfigName::SK8P8;
  std::vector<RoundSchedule> rounds;
  double validation_fraction = 0.1;
  std::uint64_t rng_seed = 1;
  int fine_tune_epochs = 10;
  std::size_t frames_per_dataset = 2000;
  int downscale_factor = 4;
  int threads = 1;
  GradientReduction reduction = GradientReduction::Sum;

  /// Four default rounds for `config`.
  static TrainingConfig defaults(nn::ConfigName config);
  /// Sets round 1 to `first` and every later round to `later`.
  void scale_set_sizes(std::size_t first, std::size_t later);
  void validate() const;
};

/// Samples of each dataset: min(frames_per_dataset, n) frames drawn without
/// replacement, then randomly dropped or duplicated to exactly `target`.
SampleSet assemble_round_set(const std::vector<Dataset>& datasets, SampleKind kind, int round_index,
                             std::uint64_t seed, std::size_t target, std::size_t frames_per_dataset = 2000,
                             int downscale_factor = 4, int threads = 1, GenerationStats* stats = nullptr);

/// Splits by source frame: every frame's samples land on one side.
std::pair<SampleSet, SampleSet> split_validation(const SampleSet& set, double fraction, std::uint64_t seed);

/// Frame-level split of datasets: (training datasets, validation frames).
std::pair<std::vector<Dataset>, std::vector<LabeledFrame>> split_frames(const std::vector<Dataset>& datasets,
                                                                        double fraction, std::uint64_t seed);

/// Balanced accuracy of thresholded ratings (0.5) on a labeled set.
double validation_score(const nn::NetworkModel& model, const SampleSet& set, int threads = 1);

struct LogRow {
  int round = 0;  // rounds + 1 marks the per-iteration fine-tuning pass
  int epoch = 0;
  std::size_t iteration = 0;
  float lr = 0.0f;
  double mean_loss = 0.0;
  double validation_score = 0.0;
};

struct TrainingResult {
  nn::NetworkModel model;
  double validation_score = 0.0;
  std::vector<LogRow> log;
  GenerationStats generation;
  std::vector<FrameKey> validation_frames;
};

/// Observer called after every logged checkpoint.
using ProgressCallback = std::function<void(const LogRow&)>;

/// Multi-round batch gradient descent with per-epoch checkpoint selection and
/// a final per-iteration fine-tuning pass. Throws TrainingError on a
/// non-finite loss.
TrainingResult train_rounds(const nn::NetworkModel& skeleton, const std::vector<Dataset>& datasets,
                            const TrainingConfig& config, const ProgressCallback& progress = {});

/// One pass over `set` in batches; calls after_batch(iteration, batch mean
/// loss) after every update. Returns the mean sample loss.
double train_epoch(nn::NetworkModel& model, const SampleSet& set, const std::vector<std::size_t>& order,
                   int batch_size, float lr, GradientReduction reduction, int threads,
                   const std::function<void(std::size_t, double)>& after_batch = {});

void write_log_csv(const std::vector<LogRow>& log, std::ostream& out);
void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path);

}  // namespace pupilnet::trainer
