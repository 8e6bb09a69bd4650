#include "pupilnet/trainer/samples.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "pupilnet/detector/detector.hpp"
#include "pupilnet/detector/resample.hpp"

namespace pupilnet::trainer {

namespace {

constexpr int kDownscale = 4;

void check_round(int round_index) {
  if (round_index < 1) throw std::invalid_argument("sample generation: round index must be >= 1");
}

bool window_fits(const GrayImage& image, PixelPos center, int size) {
  const int lead = detector::window_lead(size);
  const int left = center.x - lead;
  const int top = center.y - lead;
  return left >= 0 && top >= 0 && left + size <= image.width && top + size <= image.height;
}

}  // namespace

nn::Tensor3 TrainingSample::to_tensor() const { return detector::normalize_patch(pixels, size); }

void GenerationStats::add(const GenerationStats& other) {
  frames_used += other.frames_used;
  frames_skipped += other.frames_skipped;
  invalid_dropped += other.invalid_dropped;
  samples += other.samples;
}

SampleKind sample_kind_for(nn::ConfigName config) {
  switch (config) {
    case nn::ConfigName::Fine:
      return SampleKind::Fine;
    case nn::ConfigName::SK8P8:
      return SampleKind::Direct;
    default:
      return SampleKind::Coarse;
  }
}

int patch_size_for(SampleKind kind) {
  switch (kind) {
    case SampleKind::Coarse:
      return 24;
    case SampleKind::Fine:
      return 89;
    case SampleKind::Direct:
      return 25;
  }
  throw std::invalid_argument("unknown sample kind");
}

std::vector<SampleOffset> coarse_offsets(int round_index, int phase) {
  check_round(round_index);
  if (phase != 0 && phase != 1) throw std::invalid_argument("sample generation: thinning phase must be 0 or 1");
  const int reach = round_index == 1 ? 6 : 12;
  std::vector<SampleOffset> out;
  for (int d = -1; d <= 1; ++d) out.push_back({d, d, 1.0f});
  int invalid_index = 0;
  for (int d = -reach; d <= reach; ++d) {
    if (std::abs(d) <= 1) continue;
    if (invalid_index++ % 2 == phase) out.push_back({d, d, 0.0f});
  }
  return out;
}

std::vector<SampleOffset> direct_offsets(int round_index, int phase) {
  const auto diagonal = coarse_offsets(round_index, phase);
  std::vector<SampleOffset> out;
  for (const auto& o : diagonal)
    if (o.label == 1.0f) out.push_back(o);
  for (const auto& o : diagonal)
    if (o.label == 1.0f && o.dx != 0) out.push_back({o.dx, -o.dy, 1.0f});
  for (const auto& o : diagonal)
    if (o.label == 0.0f) out.push_back(o);
  for (const auto& o : diagonal)
    if (o.label == 0.0f) out.push_back({o.dx, -o.dy, 0.0f});
  return out;
}

std::vector<SampleOffset> fine_offsets() {
  std::vector<SampleOffset> out;
  for (int d = -3; d <= 3; ++d) out.push_back({d, d, 1.0f});
  for (int d = -24; d <= 24; d += 3)
    if (std::abs(d) >= 6) out.push_back({d, d, 0.0f});
  return out;
}

int thinning_phase(const LabeledFrame& frame) { return static_cast<int>(frame.frame_index % 2); }

LabeledFrame working_frame(const LabeledFrame& frame, SampleKind kind, int downscale_factor) {
  if (kind == SampleKind::Fine) return frame;
  LabeledFrame out;
  out.image = detector::downscale_bicubic(frame.image, downscale_factor);
  out.pupil = detector::downsample_position(frame.pupil, downscale_factor);
  out.dataset_id = frame.dataset_id;
  out.frame_index = frame.frame_index;
  return out;
}

std::vector<TrainingSample> samples_from_working_frame(const LabeledFrame& working, SampleKind kind, int round_index,
                                                       GenerationStats* stats) {
  const int phase = thinning_phase(working);
  const auto offsets = kind == SampleKind::Coarse   ? coarse_offsets(round_index, phase)
                       : kind == SampleKind::Direct ? direct_offsets(round_index, phase)
                                                    : fine_offsets();
  const int size = patch_size_for(kind);
  const PixelPos base = round_to_pixel(working.pupil);
  GenerationStats local;

  std::vector<TrainingSample> valid;
  std::vector<TrainingSample> invalid;
  for (const auto& o : offsets) {
    const PixelPos center{base.x + o.dx, base.y + o.dy};
    if (!window_fits(working.image, center, size)) {
      if (o.label == 1.0f) {
        local.frames_skipped = 1;
        if (stats) stats->add(local);
        return {};
      }
      ++local.invalid_dropped;
      continue;
    }
    TrainingSample s;
    s.size = size;
    s.pixels = detector::extract_patch_pixels(working.image, center, size);
    s.label = o.label;
    s.source = {working.dataset_id, working.frame_index, o.dx, o.dy};
    (o.label == 1.0f ? valid : invalid).push_back(std::move(s));
  }

  std::vector<TrainingSample> out = valid;
  if (kind == SampleKind::Fine) {
    for (std::size_t i = 0; out.size() < invalid.size(); ++i) out.push_back(valid[i % valid.size()]);
  }
  out.insert(out.end(), invalid.begin(), invalid.end());
  local.frames_used = 1;
  local.samples = out.size();
  if (stats) stats->add(local);
  return out;
}

std::vector<TrainingSample> gen_coarse_samples(const LabeledFrame& frame, int round_index, GenerationStats* stats) {
  return samples_from_working_frame(working_frame(frame, SampleKind::Coarse, kDownscale), SampleKind::Coarse,
                                    round_index, stats);
}

std::vector<TrainingSample> gen_fine_samples(const LabeledFrame& frame, GenerationStats* stats) {
  return samples_from_working_frame(frame, SampleKind::Fine, 1, stats);
}

std::vector<TrainingSample> gen_direct_samples(const LabeledFrame& frame, int round_index, GenerationStats* stats) {
  return samples_from_working_frame(working_frame(frame, SampleKind::Direct, kDownscale), SampleKind::Direct,
                                    round_index, stats);
}

}  // namespace pupilnet::trainer
