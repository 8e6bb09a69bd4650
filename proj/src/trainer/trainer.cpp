#include "pupilnet/trainer/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "pupilnet/parallel.hpp"
#include "pupilnet/random.hpp"

namespace pupilnet::trainer {

namespace {

// Fixed partition of every batch, so summation order and therefore the
// trained weights do not depend on the thread count.
constexpr std::size_t kBatchChunks = 4;

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_number(float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

float RoundSchedule::effective_lr(int epoch) const {
  if (epoch < 1) throw std::invalid_argument("effective_lr: epochs are 1-based");
  const int drops = lr_drop_every > 0 ? (epoch - 1) / lr_drop_every : 0;
  const double lr = static_cast<double>(start_lr) * std::pow(static_cast<double>(lr_drop_factor), drops);
  return std::max(static_cast<float>(lr), lr_floor);
}

RoundSchedule default_round(int round_index) {
  RoundSchedule r;
  r.round_index = round_index;
  r.start_lr = static_cast<float>(std::pow(10.0, -round_index));
  r.set_size_target = round_index == 1 ? 20000 : 40000;
  return r;
}

TrainingConfig TrainingConfig::defaults(nn::ConfigName config) {
  TrainingConfig c;
  c.target_config = config;
  for (int r = 1; r <= 4; ++r) c.rounds.push_back(default_round(r));
  return c;
}

void TrainingConfig::scale_set_sizes(std::size_t first, std::size_t later) {
  for (auto& r : rounds) r.set_size_target = r.round_index == 1 ? first : later;
}

void TrainingConfig::validate() const {
  if (rounds.empty()) throw std::invalid_argument("training config: at least one round required");
  for (const auto& r : rounds) {
    if (r.round_index < 1) throw std::invalid_argument("training config: round index must be >= 1");
    if (r.epochs < 1 || r.batch_size < 1 || r.set_size_target < 1)
      throw std::invalid_argument("training config: epochs, batch size and set size must be positive");
    if (!(r.start_lr > 0.0f) || !(r.lr_floor >= 0.0f) || !(r.lr_drop_factor > 0.0f && r.lr_drop_factor <= 1.0f))
      throw std::invalid_argument("training config: invalid learning rate schedule");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    throw std::invalid_argument("training config: validation fraction must lie in (0, 0.5)");
  if (fine_tune_epochs < 0 || frames_per_dataset < 1 || downscale_factor < 1)
    throw std::invalid_argument("training config: invalid fine-tune epochs, frame count or downscale factor");
}

SampleSet assemble_round_set(const std::vector<Dataset>& datasets, SampleKind kind, int round_index,
                             std::uint64_t seed, std::size_t target, std::size_t frames_per_dataset,
                             int downscale_factor, int threads, GenerationStats* stats) {
  if (datasets.empty()) throw std::invalid_argument("assemble_round_set: no datasets");
  if (target == 0) throw std::invalid_argument("assemble_round_set: target must be positive");
  SampleSet out;
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const auto& frames = datasets[di].frames;
    if (frames.empty()) throw std::invalid_argument("assemble_round_set: dataset '" + datasets[di].id + "' is empty");
    std::mt19937_64 rng(derive_seed(seed, di));

    std::vector<std::size_t> picked(frames.size());
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    std::shuffle(picked.begin(), picked.end(), rng);
    picked.resize(std::min(frames_per_dataset, frames.size()));
    std::sort(picked.begin(), picked.end());

    std::vector<SampleSet> per_frame(picked.size());
    std::vector<GenerationStats> per_stats(picked.size());
    parallel_for(picked.size(), threads, [&](std::size_t i) {
      const auto working = working_frame(frames[picked[i]], kind, downscale_factor);
      per_frame[i] = samples_from_working_frame(working, kind, round_index, &per_stats[i]);
    });
    SampleSet pool;
    for (std::size_t i = 0; i < picked.size(); ++i) {
      if (stats) stats->add(per_stats[i]);
      for (auto& s : per_frame[i]) pool.push_back(std::move(s));
    }
    if (pool.empty())
      throw TrainingError("dataset '" + datasets[di].id + "' yields no samples; every frame is too close to the border");

    std::vector<std::size_t> chosen;
    if (pool.size() >= target) {
      chosen.resize(pool.size());
      std::iota(chosen.begin(), chosen.end(), std::size_t{0});
      std::shuffle(chosen.begin(), chosen.end(), rng);
      chosen.resize(target);
      std::sort(chosen.begin(), chosen.end());
    } else {
      for (std::size_t c = 0; c < target / pool.size(); ++c)
        for (std::size_t i = 0; i < pool.size(); ++i) chosen.push_back(i);
      std::vector<std::size_t> extra(pool.size());
      std::iota(extra.begin(), extra.end(), std::size_t{0});
      std::shuffle(extra.begin(), extra.end(), rng);
      extra.resize(target % pool.size());
      std::sort(extra.begin(), extra.end());
      chosen.insert(chosen.end(), extra.begin(), extra.end());
    }
    for (std::size_t i : chosen) out.push_back(pool[i]);
  }
  return out;
}

std::pair<SampleSet, SampleSet> split_validation(const SampleSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5)) throw std::invalid_argument("split_validation: fraction must lie in (0, 0.5)");
  std::set<FrameKey> unique;
  for (const auto& s : set) unique.insert(s.source.frame());
  std::vector<FrameKey> keys(unique.begin(), unique.end());
  const auto n_val = static_cast<std::size_t>(std::max<long long>(1, std::llround(fraction * keys.size())));
  if (keys.size() < 2 || n_val >= keys.size())
    throw std::invalid_argument("split_validation: too few source frames to split (" + std::to_string(keys.size()) + ")");
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);
  const std::set<FrameKey> held(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::pair<SampleSet, SampleSet> out;
  for (const auto& s : set) (held.count(s.source.frame()) ? out.second : out.first).push_back(s);
  return out;
}

std::pair<std::vector<Dataset>, std::vector<LabeledFrame>> split_frames(const std::vector<Dataset>& datasets,
                                                                        double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5)) throw std::invalid_argument("split_frames: fraction must lie in (0, 0.5)");
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (std::size_t f = 0; f < datasets[d].frames.size(); ++f) keys.emplace_back(d, f);
  const auto n_val = static_cast<std::size_t>(std::max<long long>(1, std::llround(fraction * keys.size())));
  if (keys.size() < 2 || n_val >= keys.size())
    throw std::invalid_argument("split_frames: too few frames to split (" + std::to_string(keys.size()) + ")");
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);
  std::sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_val));
  const std::set<std::pair<std::size_t, std::size_t>> held(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::pair<std::vector<Dataset>, std::vector<LabeledFrame>> out;
  for (std::size_t i = 0; i < n_val; ++i) out.second.push_back(datasets[keys[i].first].frames[keys[i].second]);
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    Dataset train{datasets[d].id, {}};
    for (std::size_t f = 0; f < datasets[d].frames.size(); ++f)
      if (!held.count({d, f})) train.frames.push_back(datasets[d].frames[f]);
    if (!train.frames.empty()) out.first.push_back(std::move(train));
  }
  return out;
}

double validation_score(const nn::NetworkModel& model, const SampleSet& set, int threads) {
  if (set.empty()) throw std::invalid_argument("validation_score: empty validation set");
  std::vector<float> ratings(set.size());
  parallel_for(set.size(), threads, [&](std::size_t i) { ratings[i] = nn::net_forward(model, set[i].to_tensor()); });
  std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool predicted = ratings[i] >= 0.5f;
    if (set[i].label >= 0.5f) {
      ++pos;
      tp += predicted;
    } else {
      ++neg;
      tn += !predicted;
    }
  }
  if (pos == 0) return static_cast<double>(tn) / neg;
  if (neg == 0) return static_cast<double>(tp) / pos;
  return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
}

double train_epoch(nn::NetworkModel& model, const SampleSet& set, const std::vector<std::size_t>& order,
                   int batch_size, float lr, GradientReduction reduction, int threads,
                   const std::function<void(std::size_t, double)>& after_batch) {
  if (order.empty()) throw std::invalid_argument("train_epoch: empty training set");
  std::vector<float> losses(order.size());
  std::vector<nn::GradientBuffer> chunk_grads(kBatchChunks, nn::GradientBuffer(model));
  std::size_t iteration = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    const std::size_t n = end - begin;
    parallel_for(kBatchChunks, threads, [&](std::size_t c) {
      chunk_grads[c].reset();
      for (std::size_t i = begin + n * c / kBatchChunks; i < begin + n * (c + 1) / kBatchChunks; ++i) {
        const auto& s = set[order[i]];
        losses[i] = nn::net_backward(model, s.to_tensor(), s.label, chunk_grads[c]);
      }
    });
    double batch_loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) batch_loss += losses[i];
    batch_loss /= static_cast<double>(n);
    if (!std::isfinite(batch_loss))
      throw TrainingError("non-finite loss at iteration " + std::to_string(iteration + 1) + " with learning rate " +
                          format_number(lr) + "; the learning rate is too high for this model");
    for (std::size_t c = 1; c < kBatchChunks; ++c) chunk_grads[0].add(chunk_grads[c]);
    const float step = reduction == GradientReduction::Sum ? lr * static_cast<float>(n) : lr;
    nn::accumulate_and_step(model, chunk_grads[0], step);
    ++iteration;
    if (after_batch) after_batch(iteration, batch_loss);
  }
  double total = 0.0;
  for (float l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

TrainingResult train_rounds(const nn::NetworkModel& skeleton, const std::vector<Dataset>& datasets,
                            const TrainingConfig& config, const ProgressCallback& progress) {
  config.validate();
  nn::validate_architecture(skeleton);
  if (skeleton.config != config.target_config)
    throw std::invalid_argument("train_rounds: skeleton is " + std::string(nn::to_string(skeleton.config)) +
                                " but the config targets " + std::string(nn::to_string(config.target_config)));
  if (datasets.empty()) throw std::invalid_argument("train_rounds: no datasets");
  const SampleKind kind = sample_kind_for(config.target_config);
  const std::uint64_t seed = config.rng_seed;

  TrainingResult result;
  auto [train_sets, validation_frames] = split_frames(datasets, config.validation_fraction, derive_seed(seed, 1));
  if (train_sets.empty()) throw std::invalid_argument("train_rounds: no training frames left after the validation split");

  // Validation patches follow the full-distance rules of the last round.
  const int validation_round = config.rounds.back().round_index;
  std::vector<SampleSet> per_frame(validation_frames.size());
  std::vector<GenerationStats> per_stats(validation_frames.size());
  parallel_for(validation_frames.size(), config.threads, [&](std::size_t i) {
    const auto working = working_frame(validation_frames[i], kind, config.downscale_factor);
    per_frame[i] = samples_from_working_frame(working, kind, validation_round, &per_stats[i]);
  });
  SampleSet validation;
  for (std::size_t i = 0; i < validation_frames.size(); ++i) {
    result.validation_frames.push_back({validation_frames[i].dataset_id, validation_frames[i].frame_index});
    for (auto& s : per_frame[i]) validation.push_back(std::move(s));
  }
  if (validation.empty()) throw TrainingError("validation frames yield no samples");

  nn::NetworkModel model = nn::init_model(skeleton, derive_seed(seed, 2));
  nn::NetworkModel best = model;
  double best_score = -1.0;
  auto record = [&](const LogRow& row) {
    result.log.push_back(row);
    if (progress) progress(row);
  };

  SampleSet set;
  for (std::size_t ri = 0; ri < config.rounds.size(); ++ri) {
    const RoundSchedule& round = config.rounds[ri];
    set = assemble_round_set(train_sets, kind, round.round_index, derive_seed(seed, 100 + ri), round.set_size_target,
                             config.frames_per_dataset, config.downscale_factor, config.threads, &result.generation);
    nn::NetworkModel round_best = model;
    double round_best_score = -1.0;
    std::size_t iteration = 0;
    for (int epoch = 1; epoch <= round.epochs; ++epoch) {
      std::vector<std::size_t> order(set.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(seed, 1000 * (ri + 1) + static_cast<std::uint64_t>(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
      const float lr = round.effective_lr(epoch);
      const double loss = train_epoch(model, set, order, round.batch_size, lr, config.reduction, config.threads);
      iteration += (set.size() + round.batch_size - 1) / round.batch_size;
      const double score = validation_score(model, validation, config.threads);
      record({static_cast<int>(ri + 1), epoch, iteration, lr, loss, score});
      if (score > round_best_score) {
        round_best_score = score;
        round_best = model;
      }
      if (score > best_score) {
        best_score = score;
        best = model;
      }
    }
    model = round_best;
  }

  const RoundSchedule& last = config.rounds.back();
  const int fine_round = static_cast<int>(config.rounds.size()) + 1;
  std::size_t fine_iteration = 0;
  for (int epoch = 1; epoch <= config.fine_tune_epochs; ++epoch) {
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 1000 * static_cast<std::uint64_t>(fine_round) + epoch));
    std::shuffle(order.begin(), order.end(), rng);
    const float lr = last.effective_lr(epoch);
    train_epoch(model, set, order, last.batch_size, lr, config.reduction, config.threads, [&](std::size_t, double batch_loss) {
      const double score = validation_score(model, validation, config.threads);
      record({fine_round, epoch, ++fine_iteration, lr, batch_loss, score});
      if (score > best_score) {
        best_score = score;
        best = model;
      }
    });
  }

  result.model = std::move(best);
  result.validation_score = best_score;
  return result;
}

void write_log_csv(const std::vector<LogRow>& log, std::ostream& out) {
  out << "round,epoch,iteration,lr,mean_loss,validation_score\n";
  for (const auto& r : log)
    out << r.round << ',' << r.epoch << ',' << r.iteration << ',' << format_number(r.lr) << ','
        << format_number(r.mean_loss) << ',' << format_number(r.validation_score) << '\n';
}

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training log '" + path.string() + "'");
  write_log_csv(log, out);
  if (!out) throw std::runtime_error("failed writing training log '" + path.string() + "'");
}

}  // namespace pupilnet::trainer
