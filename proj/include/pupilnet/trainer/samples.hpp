#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pupilnet/dataset.hpp"
#include "pupilnet/nn/network.hpp"
#include "pupilnet/nn/tensor.hpp"

namespace pupilnet::trainer {

struct SampleSource {
  std::string dataset_id;
  std::size_t frame_index = 0;
  int dx = 0;  // offset of the patch center from the rounded label
  int dy = 0;

  FrameKey frame() const { return {dataset_id, frame_index}; }
  friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

/// Square 8-bit patch with its binary label. Pixels are kept raw to keep
/// large sample sets compact; to_tensor() yields the network input.
struct TrainingSample {
  int size = 0;
  std::vector<std::uint8_t> pixels;
  float label = 0.0f;
  SampleSource source;

  nn::Tensor3 to_tensor() const;
  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

using SampleSet = std::vector<TrainingSample>;

enum class SampleKind { Coarse, Fine, Direct };

/// Sample procedure matching a network configuration.
SampleKind sample_kind_for(nn::ConfigName config);

/// Candidate offset relative to the rounded label.
struct SampleOffset {
  int dx = 0;
  int dy = 0;
  float label = 0.0f;
  friend bool operator==(const SampleOffset&, const SampleOffset&) = default;
};

/// Diagonal offsets (d, d) for |d| <= 6 (round 1) or 12 (later rounds). Valid
/// offsets (|d| <= 1) come first, then the invalid ones that survive
/// thinning: ordered by increasing d, every second one is dropped, starting
/// with index 1 for phase 0 and index 0 for phase 1. Either phase keeps the
/// same count; a single fixed phase leaves the nearest negative on one side
/// only and skews the learned response toward the other.
std::vector<SampleOffset> coarse_offsets(int round_index, int phase = 0);
/// coarse_offsets() on both diagonals, (0, 0) once.
std::vector<SampleOffset> direct_offsets(int round_index, int phase = 0);
/// Valid (d, d) for |d| <= 3 and invalid (d, d) for |d| in {6, 9, ..., 24}.
/// Duplication of valid samples happens after border filtering.
std::vector<SampleOffset> fine_offsets();

struct GenerationStats {
  std::size_t frames_used = 0;
  std::size_t frames_skipped = 0;   // a valid window left the image
  std::size_t invalid_dropped = 0;  // invalid windows outside the image
  std::size_t samples = 0;

  void add(const GenerationStats& other);
};

/// Frame at the resolution the sample procedure works on: downscaled by
/// `downscale_factor` for coarse and direct samples, unchanged for fine.
LabeledFrame working_frame(const LabeledFrame& frame, SampleKind kind, int downscale_factor = 4);

/// Thinning phase used for a frame: alternates with the frame index.
int thinning_phase(const LabeledFrame& frame);
/// Cuts patches at working resolution. Frames whose valid windows do not all
/// fit are skipped (empty result, counted in `stats`); invalid windows that do
/// not fit are dropped. Fine samples duplicate valid patches in order until
/// they match the number of invalid ones.
std::vector<TrainingSample> samples_from_working_frame(const LabeledFrame& working, SampleKind kind, int round_index,
                                                       GenerationStats* stats = nullptr);

/// Full-resolution frame in, 24x24 patches of the 4x-downscaled image out.
std::vector<TrainingSample> gen_coarse_samples(const LabeledFrame& frame, int round_index,
                                               GenerationStats* stats = nullptr);
/// Full-resolution frame in, 89x89 full-resolution patches out.
std::vector<TrainingSample> gen_fine_samples(const LabeledFrame& frame, GenerationStats* stats = nullptr);
/// Full-resolution frame in, 25x25 patches of the 4x-downscaled image out.
std::vector<TrainingSample> gen_direct_samples(const LabeledFrame& frame, int round_index,
                                               GenerationStats* stats = nullptr);

int patch_size_for(SampleKind kind);

}  // namespace pupilnet::trainer
