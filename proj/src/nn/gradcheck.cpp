#include "pupilnet/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace pupilnet::nn {

namespace {

using ModelD = BasicNetworkModel<double>;
using TensorD = BasicTensor3<double>;

// Activations of the naive pass, kept per stage so a single perturbed
// parameter only forces recomputation of the stages downstream of it.
struct Stages {
  int o1 = 0;
  int p = 0;
  int o2 = 0;
  std::vector<double> z1;      // K1 x o1 x o1, before tanh
  std::vector<double> h1;      // K1 x o1 x o1, tanh applied
  std::vector<double> pooled;  // K1 x p x p
  std::vector<double> h2;      // K2 x o2 x o2, tanh applied
  double rating = 0.0;
};

void conv1_channel(const ModelD& m, const TensorD& patch, int k, Stages& s) {
  const int f = m.conv1.filter_size;
  for (int y = 0; y < s.o1; ++y) {
    for (int x = 0; x < s.o1; ++x) {
      double acc = m.conv1.biases[k];
      for (int r = 0; r < f; ++r)
        for (int c = 0; c < f; ++c) acc += m.conv1.weight(k, 0, r, c) * patch.at(0, y + r, x + c);
      s.z1[(static_cast<std::size_t>(k) * s.o1 + y) * s.o1 + x] = acc;
      s.h1[(static_cast<std::size_t>(k) * s.o1 + y) * s.o1 + x] = std::tanh(acc);
    }
  }
}

// Channel k after conv1 weight (r, c) moved by `delta` (r < 0: the bias),
// derived from the cached pre-activations instead of a full convolution.
void conv1_channel_shifted(const TensorD& patch, int k, int r, int c, double delta, Stages& s) {
  for (int y = 0; y < s.o1; ++y) {
    for (int x = 0; x < s.o1; ++x) {
      const std::size_t i = (static_cast<std::size_t>(k) * s.o1 + y) * s.o1 + x;
      const double input = r < 0 ? 1.0 : patch.at(0, y + r, x + c);
      s.h1[i] = std::tanh(s.z1[i] + delta * input);
    }
  }
}

void pool_channel(const ModelD& m, int k, Stages& s) {
  const int w = m.pool.window;
  for (int py = 0; py < s.p; ++py) {
    for (int px = 0; px < s.p; ++px) {
      double acc = 0.0;
      for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b)
          acc += s.h1[(static_cast<std::size_t>(k) * s.o1 + py * m.pool.stride + a) * s.o1 + px * m.pool.stride + b];
      s.pooled[(static_cast<std::size_t>(k) * s.p + py) * s.p + px] = acc / (w * w);
    }
  }
}

void conv2_channel(const ModelD& m, int k, Stages& s) {
  const int f = m.conv2.filter_size;
  for (int y = 0; y < s.o2; ++y) {
    for (int x = 0; x < s.o2; ++x) {
      double acc = m.conv2.biases[k];
      for (int c = 0; c < m.conv2.in_channels; ++c)
        for (int r = 0; r < f; ++r)
          for (int q = 0; q < f; ++q)
            acc += m.conv2.weight(k, c, r, q) * s.pooled[(static_cast<std::size_t>(c) * s.p + y + r) * s.p + x + q];
      s.h2[(static_cast<std::size_t>(k) * s.o2 + y) * s.o2 + x] = std::tanh(acc);
    }
  }
}

void output_stage(const ModelD& m, Stages& s) {
  double z = m.fc.bias;
  for (std::size_t i = 0; i < s.h2.size(); ++i) z += m.fc.weights[i] * s.h2[i];
  s.rating = 1.0 / (1.0 + std::exp(-z));
}

Stages full_pass(const ModelD& m, const TensorD& patch) {
  Stages s;
  s.o1 = m.input_size - m.conv1.filter_size + 1;
  s.p = (s.o1 - m.pool.window) / m.pool.stride + 1;
  s.o2 = s.p - m.conv2.filter_size + 1;
  s.z1.assign(static_cast<std::size_t>(m.conv1.out_channels) * s.o1 * s.o1, 0.0);
  s.h1.assign(s.z1.size(), 0.0);
  s.pooled.assign(static_cast<std::size_t>(m.conv1.out_channels) * s.p * s.p, 0.0);
  s.h2.assign(static_cast<std::size_t>(m.conv2.out_channels) * s.o2 * s.o2, 0.0);
  for (int k = 0; k < m.conv1.out_channels; ++k) {
    conv1_channel(m, patch, k, s);
    pool_channel(m, k, s);
  }
  for (int k = 0; k < m.conv2.out_channels; ++k) conv2_channel(m, k, s);
  output_stage(m, s);
  return s;
}

double loss_of(double rating, double target) { return 0.5 * (rating - target) * (rating - target); }

struct Worst {
  GradCheckReport report;
  double floor = 0.0;

  void record(const std::string& name, std::size_t index, double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double err = std::abs(analytic - numeric) / denom;
    ++report.parameters_checked;
    if (err > report.max_relative_error || report.worst_parameter.empty()) {
      report.max_relative_error = std::max(err, report.max_relative_error);
      report.worst_parameter = name + "[" + std::to_string(index) + "]";
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
};

}  // namespace

double reference_forward(const BasicNetworkModel<double>& model, const BasicTensor3<double>& patch) {
  return full_pass(model, patch).rating;
}

GradCheckReport grad_check(const NetworkModel& model, const Tensor3& patch, float target,
                           const GradCheckOptions& options) {
  ModelD m = model.cast<double>();
  const TensorD x = patch.cast<double>();
  const double t = target;

  BasicGradientBuffer<double> analytic(m);
  net_backward(m, x, t, analytic, options.fault);

  const Stages base = full_pass(m, x);
  const double eps = options.epsilon;
  Worst worst;
  worst.floor = options.magnitude_floor;

  // Perturbations are evaluated on one working copy; after each parameter
  // the touched stages are restored from `base`.
  Stages s = base;
  auto restore = [&](int conv1_channel) {
    if (conv1_channel >= 0) {
      const std::size_t n1 = static_cast<std::size_t>(s.o1) * s.o1;
      const std::size_t np = static_cast<std::size_t>(s.p) * s.p;
      std::copy_n(base.h1.begin() + conv1_channel * n1, n1, s.h1.begin() + conv1_channel * n1);
      std::copy_n(base.pooled.begin() + conv1_channel * np, np, s.pooled.begin() + conv1_channel * np);
    }
    s.h2 = base.h2;
    s.rating = base.rating;
  };

  // Central difference of the loss while `param` is nudged; `recompute`
  // refreshes the stages that depend on it.
  auto central = [&](double& param, auto&& recompute) {
    const double saved = param;
    param = saved + eps;
    recompute(s);
    const double up = loss_of(s.rating, t);
    param = saved - eps;
    recompute(s);
    const double down = loss_of(s.rating, t);
    param = saved;
    restore(-1);
    return (up - down) / (2.0 * eps);
  };

  // Single-channel input: conv1 weight (k, 0, r, c) feeds pre-activation
  // (k, y, x) through patch(y + r, x + c).
  auto central_conv1 = [&](int k, int r, int c) {
    auto loss_at = [&](double delta) {
      conv1_channel_shifted(x, k, r, c, delta, s);
      pool_channel(m, k, s);
      for (int j = 0; j < m.conv2.out_channels; ++j) conv2_channel(m, j, s);
      output_stage(m, s);
      return loss_of(s.rating, t);
    };
    const double numeric = (loss_at(eps) - loss_at(-eps)) / (2.0 * eps);
    restore(k);
    return numeric;
  };
  const int f1 = m.conv1.filter_size;
  for (int k = 0; k < m.conv1.out_channels; ++k) {
    for (int r = 0; r < f1; ++r)
      for (int c = 0; c < f1; ++c) {
        const std::size_t idx = (static_cast<std::size_t>(k) * f1 + r) * f1 + c;
        worst.record("conv1.weights", idx, analytic.conv1_weights[idx], central_conv1(k, r, c));
      }
    worst.record("conv1.biases", k, analytic.conv1_biases[k], central_conv1(k, -1, 0));
  }

  const std::size_t per_out2 = m.conv2.weights.size() / m.conv2.out_channels;
  for (int k = 0; k < m.conv2.out_channels; ++k) {
    auto redo = [&](Stages& s) {
      conv2_channel(m, k, s);
      output_stage(m, s);
    };
    for (std::size_t i = 0; i < per_out2; ++i) {
      const std::size_t idx = k * per_out2 + i;
      worst.record("conv2.weights", idx, analytic.conv2_weights[idx], central(m.conv2.weights[idx], redo));
    }
    worst.record("conv2.biases", k, analytic.conv2_biases[k], central(m.conv2.biases[k], redo));
  }

  auto redo_out = [&](Stages& s) { output_stage(m, s); };
  for (std::size_t i = 0; i < m.fc.weights.size(); ++i)
    worst.record("fc.weights", i, analytic.fc_weights[i], central(m.fc.weights[i], redo_out));
  worst.record("fc.bias", 0, analytic.fc_bias, central(m.fc.bias, redo_out));
  return worst.report;
}

NetworkModel random_model(ConfigName config, std::uint64_t seed) {
  NetworkModel m = build_config(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::vector<float>& values, double fan_in) {
    std::normal_distribution<float> gauss(0.0f, static_cast<float>(1.0 / std::sqrt(fan_in)));
    for (auto& v : values) v = gauss(rng);
  };
  std::normal_distribution<float> bias(0.0f, 0.1f);
  fill(m.conv1.weights, static_cast<double>(m.conv1.filter_size) * m.conv1.filter_size * m.conv1.in_channels);
  for (auto& b : m.conv1.biases) b = bias(rng);
  fill(m.conv2.weights, static_cast<double>(m.conv2.filter_size) * m.conv2.filter_size * m.conv2.in_channels);
  for (auto& b : m.conv2.biases) b = bias(rng);
  fill(m.fc.weights, m.fc.in_count);
  m.fc.bias = bias(rng);
  return m;
}

Tensor3 random_patch(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor3 patch(size, size, 1);
  for (auto& v : patch.values) v = u(rng);
  return patch;
}

}  // namespace pupilnet::nn
