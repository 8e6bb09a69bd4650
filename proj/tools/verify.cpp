#include "verify.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pupilnet/detector/detector.hpp"
#include "pupilnet/detector/response_map.hpp"
#include "pupilnet/nn/gradcheck.hpp"
#include "pupilnet/random.hpp"

namespace pupilnet::tools {

namespace {

GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(px(rng));
  return img;
}

// Every window rated through the shared-feature scan must equal the rating of
// the same window through the per-patch forward pass.
bool scan_matches_per_patch(nn::ConfigName config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto model = nn::random_model(config, seed);
  const GrayImage img = random_image(model.input_size + 9, model.input_size + 6, rng);
  const auto map = detector::coarse_response_map(img, model, 1);
  for (int row = 0; row < map.rows; ++row)
    for (int col = 0; col < map.cols; ++col) {
      const auto center = map.position(col, row);
      if (map.at(col, row) != nn::net_forward(model, detector::extract_patch(img, center, model.input_size)))
        return false;
    }
  return true;
}

bool uniform_window_has_no_shift() {
  detector::ResponseMap map({0, 0}, 1, 9, 9, detector::CoordinateSpace::Downscaled);
  map.ratings.assign(map.ratings.size(), 0.25f);
  const auto shift = detector::refine_subpixel(map, {4, 4});
  return std::abs(shift.dx) < 1e-9 && std::abs(shift.dy) < 1e-9;
}

}  // namespace

bool run_verify(const VerifyOptions& options, std::ostream& out) {
  std::vector<std::string> failures;
  for (const auto config : nn::all_configs()) {
    const std::string name(nn::to_string(config));
    double worst = 0.0;
    std::string worst_param;
    for (int t = 0; t < options.trials; ++t) {
      const std::uint64_t s = derive_seed(options.seed, static_cast<std::uint64_t>(config) * 1000 + t);
      const auto model = nn::random_model(config, s);
      const auto patch = nn::random_patch(model.input_size, derive_seed(s, 1));
      const float target = (t % 2 == 0) ? 1.0f : 0.0f;
      nn::GradCheckOptions gc;
      gc.fault = options.fault;
      const auto report = nn::grad_check(model, patch, target, gc);
      if (report.max_relative_error > worst || worst_param.empty()) {
        worst = report.max_relative_error;
        worst_param = report.worst_parameter;
      }
    }
    const bool ok = worst < options.tolerance;
    out << "grad_check " << name << ": worst relative error " << worst << " at " << worst_param << " over "
        << options.trials << " trials " << (ok ? "PASS" : "FAIL") << '\n';
    if (!ok) failures.push_back("grad_check " + name);
  }

  for (const auto config : {nn::ConfigName::CK8P8, nn::ConfigName::SK8P8}) {
    const std::string name(nn::to_string(config));
    bool ok = true;
    for (int t = 0; t < 3 && ok; ++t) ok = scan_matches_per_patch(config, derive_seed(options.seed, 50 + t));
    out << "window scan " << name << ": " << (ok ? "PASS" : "FAIL") << '\n';
    if (!ok) failures.push_back("window scan " + name);
  }

  const bool refine_ok = uniform_window_has_no_shift();
  out << "subpixel refinement: " << (refine_ok ? "PASS" : "FAIL") << '\n';
  if (!refine_ok) failures.push_back("subpixel refinement");

  if (failures.empty()) {
    out << "all checks passed\n";
    return true;
  }
  out << failures.size() << " check(s) failed:";
  for (const auto& f : failures) out << ' ' << f << ';';
  out << '\n';
  return false;
}

}  // namespace pupilnet::tools
