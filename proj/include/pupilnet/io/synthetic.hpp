#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pupilnet/dataset.hpp"
#include "pupilnet/geometry.hpp"
#include "pupilnet/image.hpp"

namespace pupilnet::io {

/// Knobs of the synthetic eye renderer. Radii and distances in pixels,
/// intensities in [0, 255].
struct SyntheticParams {
  int width = 384;
  int height = 288;
  double pupil_radius_min = 12.0;  // ellipse semi-axes
  double pupil_radius_max = 26.0;
  double iris_radius_min = 44.0;
  double iris_radius_max = 66.0;
  double pupil_intensity = 35.0;
  double iris_intensity = 110.0;
  double sclera_intensity = 190.0;
  int reflections_min = 0;
  int reflections_max = 3;
  double reflection_radius_min = 2.0;
  double reflection_radius_max = 6.0;
  double reflection_intensity = 245.0;
  double illumination_gradient = 20.0;  // max brightness change across the frame
  double noise_sigma = 6.0;
  double blur_sigma = 1.0;
  double border_margin = 64.0;  // minimum distance of the pupil center to the border
  std::string dataset_id = "synthetic";
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument on infeasible geometry or intensity order.
void validate(const SyntheticParams& params);

struct Reflection {
  Point2 center;
  double radius = 0.0;
};

struct EyeGeometry {
  Point2 pupil_center;
  double pupil_major = 0.0;  // semi-axis along `pupil_angle`
  double pupil_minor = 0.0;
  double pupil_angle = 0.0;  // radians
  Point2 iris_center;
  double iris_radius = 0.0;
  std::vector<Reflection> reflections;
  double gradient_x = 0.0;  // illumination slope, intensity per pixel
  double gradient_y = 0.0;
};

EyeGeometry sample_geometry(const SyntheticParams& params, std::mt19937_64& rng);

/// Draws sclera, iris disc, pupil ellipse and reflections with anti-aliased
/// edges, blurs, adds Gaussian noise and quantizes.
GrayImage render_eye(const SyntheticParams& params, const EyeGeometry& geometry, std::uint64_t noise_seed);

/// Deterministic per seed; frame i depends only on (seed, i).
std::vector<LabeledFrame> synth_generate(const SyntheticParams& params, std::size_t count);

/// Writes frame_NNNNN.pgm files plus manifest.csv into `directory`.
void write_synthetic_dataset(const std::vector<LabeledFrame>& frames, const std::filesystem::path& directory);

/// True when (x, y) lies inside the pupil ellipse.
bool inside_pupil(const EyeGeometry& g, double x, double y);

}  // namespace pupilnet::io
