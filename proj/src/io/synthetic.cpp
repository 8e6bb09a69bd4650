#include "pupilnet/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "pupilnet/io/image_io.hpp"
#include "pupilnet/io/manifest.hpp"
#include "pupilnet/random.hpp"

namespace pupilnet::io {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Approximate signed distance to the pupil ellipse boundary (negative inside).
double pupil_distance(const EyeGeometry& g, double x, double y) {
  const double c = std::cos(g.pupil_angle);
  const double s = std::sin(g.pupil_angle);
  const double dx = x - g.pupil_center.x;
  const double dy = y - g.pupil_center.y;
  const double u = (c * dx + s * dy) / g.pupil_major;
  const double v = (-s * dx + c * dy) / g.pupil_minor;
  return (std::sqrt(u * u + v * v) - 1.0) * g.pupil_minor;
}

double disc_distance(Point2 center, double radius, double x, double y) {
  return std::hypot(x - center.x, y - center.y) - radius;
}

// Fraction of the pixel at (px, py) inside the shape, 4x4 supersampled near
// the boundary.
template <typename Dist>
double coverage(Dist&& dist, int px, int py) {
  const double d = dist(px, py);
  if (d <= -1.0) return 1.0;
  if (d >= 1.0) return 0.0;
  int inside = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx)
      if (dist(px - 0.375 + 0.25 * sx, py - 0.375 + 0.25 * sy) < 0.0) ++inside;
  return inside / 16.0;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

void blur(std::vector<double>& img, int w, int h, double sigma) {
  if (sigma <= 0.0) return;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img[static_cast<std::size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
      img[static_cast<std::size_t>(y) * w + x] = acc;
    }
}

}  // namespace

void validate(const SyntheticParams& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("synthetic parameters: " + what); };
  if (p.width < 8 || p.height < 8) fail("image must be at least 8x8");
  if (p.pupil_radius_min <= 0.0 || p.pupil_radius_max < p.pupil_radius_min) fail("invalid pupil radius range");
  if (p.iris_radius_max < p.iris_radius_min) fail("invalid iris radius range");
  if (p.pupil_radius_max >= p.iris_radius_min) fail("pupil radius must be smaller than iris radius");
  for (double v : {p.pupil_intensity, p.iris_intensity, p.sclera_intensity, p.reflection_intensity})
    if (v < 0.0 || v > 255.0) fail("intensities must lie in [0, 255]");
  if (!(p.pupil_intensity < p.iris_intensity && p.iris_intensity < p.sclera_intensity))
    fail("pupil must be darker than iris, iris darker than sclera");
  if (p.reflections_min < 0 || p.reflections_max < p.reflections_min) fail("invalid reflection count range");
  if (p.reflection_radius_min < 0.0 || p.reflection_radius_max < p.reflection_radius_min)
    fail("invalid reflection radius range");
  if (p.noise_sigma < 0.0 || p.blur_sigma < 0.0 || p.illumination_gradient < 0.0) fail("negative noise, blur or gradient");
  if (p.border_margin < 1.0 || 2.0 * p.border_margin >= std::min(p.width, p.height))
    fail("border margin leaves no room for the pupil");
}

bool inside_pupil(const EyeGeometry& g, double x, double y) { return pupil_distance(g, x, y) < 0.0; }

EyeGeometry sample_geometry(const SyntheticParams& p, std::mt19937_64& rng) {
  EyeGeometry g;
  g.pupil_center = {uniform(rng, p.border_margin, p.width - 1 - p.border_margin),
                    uniform(rng, p.border_margin, p.height - 1 - p.border_margin)};
  const double a = uniform(rng, p.pupil_radius_min, p.pupil_radius_max);
  const double b = uniform(rng, p.pupil_radius_min, p.pupil_radius_max);
  g.pupil_major = std::max(a, b);
  g.pupil_minor = std::min(a, b);
  g.pupil_angle = uniform(rng, 0.0, std::numbers::pi);
  g.iris_radius = uniform(rng, p.iris_radius_min, p.iris_radius_max);
  // The pupil stays fully inside the iris.
  const double slack = std::max(0.0, g.iris_radius - g.pupil_major - 2.0);
  const double off_r = uniform(rng, 0.0, 0.5 * slack);
  const double off_t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  g.iris_center = {g.pupil_center.x + off_r * std::cos(off_t), g.pupil_center.y + off_r * std::sin(off_t)};

  const int n = std::uniform_int_distribution<int>(p.reflections_min, p.reflections_max)(rng);
  for (int i = 0; i < n; ++i) {
    Reflection r;
    // Glints cluster on the iris and may cover part of the pupil; their size
    // is bounded by the pupil so the pupil remains the darkest structure.
    r.radius = std::min(uniform(rng, p.reflection_radius_min, p.reflection_radius_max), 0.3 * g.pupil_minor);
    const double rr = uniform(rng, 0.0, g.iris_radius);
    const double rt = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    r.center = {g.iris_center.x + rr * std::cos(rt), g.iris_center.y + rr * std::sin(rt)};
    g.reflections.push_back(r);
  }
  const double slope = p.illumination_gradient / std::max(p.width, p.height);
  const double gt = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double gm = uniform(rng, 0.0, slope);
  g.gradient_x = gm * std::cos(gt);
  g.gradient_y = gm * std::sin(gt);
  return g;
}

GrayImage render_eye(const SyntheticParams& p, const EyeGeometry& g, std::uint64_t noise_seed) {
  const int w = p.width;
  const int h = p.height;
  std::vector<double> img(static_cast<std::size_t>(w) * h);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  auto pupil = [&](double x, double y) { return pupil_distance(g, x, y); };
  auto iris = [&](double x, double y) { return disc_distance(g.iris_center, g.iris_radius, x, y); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = p.sclera_intensity;
      v += (p.iris_intensity - v) * coverage(iris, x, y);
      v += (p.pupil_intensity - v) * coverage(pupil, x, y);
      for (const auto& r : g.reflections) {
        auto glint = [&](double qx, double qy) { return disc_distance(r.center, r.radius, qx, qy); };
        v += (p.reflection_intensity - v) * coverage(glint, x, y);
      }
      v += g.gradient_x * (x - cx) + g.gradient_y * (y - cy);
      img[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  blur(img, w, h, p.blur_sigma);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, p.noise_sigma > 0.0 ? p.noise_sigma : 1.0);
  GrayImage out(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = img[i] + (p.noise_sigma > 0.0 ? noise(rng) : 0.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  return out;
}

std::vector<LabeledFrame> synth_generate(const SyntheticParams& params, std::size_t count) {
  validate(params);
  std::vector<LabeledFrame> frames(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(params.seed, 2 * i));
    const EyeGeometry g = sample_geometry(params, rng);
    frames[i].image = render_eye(params, g, derive_seed(params.seed, 2 * i + 1));
    frames[i].pupil = g.pupil_center;
    frames[i].dataset_id = params.dataset_id;
    frames[i].frame_index = i;
  }
  return frames;
}

void write_synthetic_dataset(const std::vector<LabeledFrame>& frames, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw ImageError(ImageErrc::Unwritable, "cannot create directory '" + directory.string() + "'");
  DatasetManifest manifest;
  manifest.root = directory;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    save_pgm(frames[i].image, directory / name);
    manifest.frames.push_back({name, frames[i].pupil.x, frames[i].pupil.y});
  }
  write_manifest(manifest, directory / "manifest.csv");
}

}  // namespace pupilnet::io
