#include "pupilnet/nn/network.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <stdexcept>
#include <string>

#include "pupilnet/nn/kernels.hpp"

namespace pupilnet::nn {

namespace {

struct ConfigRow {
  ConfigName name;
  std::string_view label;
  int input_size;
  int conv1_filter;
  int conv1_kernels;
  int pool;
  int conv2_filter;
  int conv2_kernels;
};

// One row per network: C/K/D of layer 1, C/K of layer 2. P equals conv2 K.
constexpr std::array<ConfigRow, 5> kConfigs{{
    {ConfigName::CK8P8, "CK8P8", 24, 5, 8, 4, 5, 8},
    {ConfigName::CK8P16, "CK8P16", 24, 5, 8, 4, 5, 16},
    {ConfigName::CK16P32, "CK16P32", 24, 5, 16, 4, 5, 32},
    {ConfigName::Fine, "FINE", 89, 20, 8, 5, 14, 8},
    {ConfigName::SK8P8, "SK8P8", 25, 6, 8, 4, 5, 8},
}};

constexpr std::array<ConfigName, 5> kAllNames{ConfigName::CK8P8, ConfigName::CK8P16, ConfigName::CK16P32,
                                              ConfigName::Fine, ConfigName::SK8P8};

const ConfigRow& row_for(ConfigName name) {
  for (const auto& row : kConfigs)
    if (row.name == name) return row;
  throw std::invalid_argument("unknown network configuration");
}

template <typename T>
void require_patch(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch) {
  if (patch.width != model.input_size || patch.height != model.input_size || patch.channels != 1) {
    throw std::invalid_argument("patch is " + std::to_string(patch.width) + "x" + std::to_string(patch.height) + "x" +
                                std::to_string(patch.channels) + " but " + std::string(to_string(model.config)) +
                                " expects " + std::to_string(model.input_size) + "x" +
                                std::to_string(model.input_size) + "x1");
  }
}

// dW[k][c][r][s] += sum_{y,x} grad_out[k][y][x] * in[c][y + r][x + s]
template <typename T>
void conv_weight_gradient(const T* in, int in_w, int in_h, const BasicConvLayer<T>& layer, const T* grad_out,
                          T* grad_weights, T* grad_biases, T sign) {
  const int f = layer.filter_size;
  const int ow = in_w - f + 1;
  const int oh = in_h - f + 1;
  const std::size_t in_plane = static_cast<std::size_t>(in_w) * in_h;
  const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
  std::vector<T> partial(static_cast<std::size_t>(ow));
  for (int k = 0; k < layer.out_channels; ++k) {
    const T* g = grad_out + k * out_plane;
    T bias_sum = T(0);
    for (std::size_t n = 0; n < out_plane; ++n) bias_sum += g[n];
    grad_biases[k] += bias_sum;
    for (int c = 0; c < layer.in_channels; ++c) {
      const T* src_plane = in + c * in_plane;
      for (int r = 0; r < f; ++r) {
        for (int s = 0; s < f; ++s) {
          std::fill(partial.begin(), partial.end(), T(0));
          for (int y = 0; y < oh; ++y) {
            const T* src = src_plane + static_cast<std::size_t>(y + r) * in_w + s;
            const T* gy = g + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) partial[x] += gy[x] * src[x];
          }
          T sum = T(0);
          for (int x = 0; x < ow; ++x) sum += partial[x];
          grad_weights[((static_cast<std::size_t>(k) * layer.in_channels + c) * f + r) * f + s] += sign * sum;
        }
      }
    }
  }
}

// grad_in[c][y + r][x + s] += sum_k grad_out[k][y][x] * w[k][c][r][s]
template <typename T>
void conv_input_gradient(int in_w, int in_h, const BasicConvLayer<T>& layer, const T* grad_out, T* grad_in) {
  const int f = layer.filter_size;
  const int ow = in_w - f + 1;
  const int oh = in_h - f + 1;
  const std::size_t in_plane = static_cast<std::size_t>(in_w) * in_h;
  const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
  for (int k = 0; k < layer.out_channels; ++k) {
    const T* g = grad_out + k * out_plane;
    for (int c = 0; c < layer.in_channels; ++c) {
      T* dst_plane = grad_in + c * in_plane;
      for (int r = 0; r < f; ++r) {
        for (int s = 0; s < f; ++s) {
          const T w = layer.weight(k, c, r, s);
          for (int y = 0; y < oh; ++y) {
            T* dst = dst_plane + static_cast<std::size_t>(y + r) * in_w + s;
            const T* gy = g + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) dst[x] += w * gy[x];
          }
        }
      }
    }
  }
}

}  // namespace

std::string_view to_string(ConfigName name) { return row_for(name).label; }

ConfigName parse_config_name(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  if (upper == "F") return ConfigName::Fine;
  for (const auto& row : kConfigs)
    if (row.label == upper) return row.name;
  throw std::invalid_argument("unknown network configuration '" + std::string(text) +
                              "' (expected one of CK8P8, CK8P16, CK16P32, FINE, SK8P8)");
}

std::span<const ConfigName> all_configs() { return kAllNames; }

NetworkModel build_config(ConfigName name) {
  const ConfigRow& row = row_for(name);
  NetworkModel model;
  model.config = name;
  model.input_size = row.input_size;
  model.conv1.filter_size = row.conv1_filter;
  model.conv1.in_channels = 1;
  model.conv1.out_channels = row.conv1_kernels;
  model.conv1.weights.assign(model.conv1.weight_count(), 0.0f);
  model.conv1.biases.assign(row.conv1_kernels, 0.0f);
  model.pool = {row.pool, row.pool};
  model.conv2.filter_size = row.conv2_filter;
  model.conv2.in_channels = row.conv1_kernels;
  model.conv2.out_channels = row.conv2_kernels;
  model.conv2.weights.assign(model.conv2.weight_count(), 0.0f);
  model.conv2.biases.assign(row.conv2_kernels, 0.0f);
  const int o2 = model.conv2_output_size();
  model.fc.in_count = row.conv2_kernels * o2 * o2;
  model.fc.weights.assign(model.fc.in_count, 0.0f);
  model.fc.bias = 0.0f;
  return model;
}

void validate_architecture(const NetworkModel& model) {
  const NetworkModel ref = build_config(model.config);
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(std::string(to_string(model.config)) + ": " + what);
  };
  if (model.input_size != ref.input_size) fail("input size mismatch");
  auto check_conv = [&](const ConvLayer& a, const ConvLayer& b, const char* name) {
    if (a.filter_size != b.filter_size || a.in_channels != b.in_channels || a.out_channels != b.out_channels)
      fail(std::string(name) + " dimensions do not match the configuration");
    if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size())
      fail(std::string(name) + " parameter count mismatch");
  };
  check_conv(model.conv1, ref.conv1, "conv1");
  if (model.pool != ref.pool) fail("pooling window mismatch");
  check_conv(model.conv2, ref.conv2, "conv2");
  if (model.fc.in_count != ref.fc.in_count || model.fc.weights.size() != ref.fc.weights.size())
    fail("fully connected layer mismatch");
}

NetworkModel init_model(NetworkModel model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 0.01f);
  for (auto& w : model.conv1.weights) w = gauss(rng);
  for (auto& w : model.conv2.weights) w = gauss(rng);
  for (auto& w : model.fc.weights) w = gauss(rng);
  std::fill(model.conv1.biases.begin(), model.conv1.biases.end(), 0.0f);
  std::fill(model.conv2.biases.begin(), model.conv2.biases.end(), 0.0f);
  model.fc.bias = 0.0f;
  return model;
}

template <typename T>
BasicGradientBuffer<T>::BasicGradientBuffer(const BasicNetworkModel<T>& model)
    : conv1_weights(model.conv1.weights.size(), T(0)),
      conv1_biases(model.conv1.biases.size(), T(0)),
      conv2_weights(model.conv2.weights.size(), T(0)),
      conv2_biases(model.conv2.biases.size(), T(0)),
      fc_weights(model.fc.weights.size(), T(0)) {}

template <typename T>
void BasicGradientBuffer<T>::reset() {
  for (auto* v : {&conv1_weights, &conv1_biases, &conv2_weights, &conv2_biases, &fc_weights})
    std::fill(v->begin(), v->end(), T(0));
  fc_bias = T(0);
  sample_count = 0;
}

template <typename T>
void BasicGradientBuffer<T>::add(const BasicGradientBuffer& other) {
  auto sum = [](std::vector<T>& dst, const std::vector<T>& src) {
    if (dst.size() != src.size()) throw std::invalid_argument("gradient buffers have different shapes");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  sum(conv1_weights, other.conv1_weights);
  sum(conv1_biases, other.conv1_biases);
  sum(conv2_weights, other.conv2_weights);
  sum(conv2_biases, other.conv2_biases);
  sum(fc_weights, other.fc_weights);
  fc_bias += other.fc_bias;
  sample_count += other.sample_count;
}

template <typename T>
bool BasicGradientBuffer<T>::matches(const BasicNetworkModel<T>& model) const {
  return conv1_weights.size() == model.conv1.weights.size() && conv1_biases.size() == model.conv1.biases.size() &&
         conv2_weights.size() == model.conv2.weights.size() && conv2_biases.size() == model.conv2.biases.size() &&
         fc_weights.size() == model.fc.weights.size();
}

template <typename T>
T net_forward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch, BasicForwardCache<T>& cache) {
  require_patch(model, patch);
  const int o1 = model.conv1_output_size();
  const int p = model.pool_output_size();
  const int o2 = model.conv2_output_size();
  cache.conv1_out = BasicTensor3<T>(o1, o1, model.conv1.out_channels);
  kernels::conv_valid(patch.values.data(), patch.width, patch.height, model.conv1, cache.conv1_out.values.data());
  kernels::tanh_inplace(cache.conv1_out.values.data(), cache.conv1_out.values.size());

  cache.pooled = BasicTensor3<T>(p, p, model.conv1.out_channels);
  const T scale = kernels::pool_scale<T>(model.pool);
  for (int c = 0; c < model.conv1.out_channels; ++c) {
    const T* plane = cache.conv1_out.plane(c);
    for (int py = 0; py < p; ++py)
      for (int px = 0; px < p; ++px)
        cache.pooled.at(c, py, px) =
            kernels::block_sum(plane, o1, px * model.pool.stride, py * model.pool.stride, model.pool.window) * scale;
  }

  cache.conv2_out = BasicTensor3<T>(o2, o2, model.conv2.out_channels);
  cache.rating = kernels::head_forward(model, cache.pooled.values.data(), p, cache.conv2_out.values.data());
  return cache.rating;
}

template <typename T>
T net_forward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch) {
  BasicForwardCache<T> cache;
  return net_forward(model, patch, cache);
}

template <typename T>
T net_backward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch, T target,
               BasicGradientBuffer<T>& grads, BackwardFault fault) {
  if (!grads.matches(model)) throw std::invalid_argument("gradient buffer does not match the model");
  BasicForwardCache<T> cache;
  const T rating = net_forward(model, patch, cache);
  const T diff = rating - target;
  const T loss = T(0.5) * diff * diff;

  // Output: d loss / d z for the logistic pre-activation.
  const T dz = diff * rating * (T(1) - rating);
  const std::size_t n2 = cache.conv2_out.values.size();
  std::vector<T> d_conv2(n2);
  for (std::size_t i = 0; i < n2; ++i) {
    const T h = cache.conv2_out.values[i];
    grads.fc_weights[i] += dz * h;
    d_conv2[i] = dz * model.fc.weights[i] * (T(1) - h * h);
  }
  grads.fc_bias += dz;

  const int p = cache.pooled.width;
  BasicTensor3<T> d_pooled(p, p, model.conv1.out_channels);
  conv_weight_gradient(cache.pooled.values.data(), p, p, model.conv2, d_conv2.data(), grads.conv2_weights.data(),
                       grads.conv2_biases.data(), T(1));
  conv_input_gradient(p, p, model.conv2, d_conv2.data(), d_pooled.values.data());

  const int o1 = cache.conv1_out.width;
  const T scale = fault == BackwardFault::PoolNoScaling ? T(1) : kernels::pool_scale<T>(model.pool);
  BasicTensor3<T> d_conv1(o1, o1, model.conv1.out_channels);
  for (int c = 0; c < model.conv1.out_channels; ++c) {
    for (int py = 0; py < p; ++py) {
      for (int px = 0; px < p; ++px) {
        const T g = d_pooled.at(c, py, px) * scale;
        for (int a = 0; a < model.pool.window; ++a)
          for (int b = 0; b < model.pool.window; ++b)
            d_conv1.at(c, py * model.pool.stride + a, px * model.pool.stride + b) += g;
      }
    }
  }
  for (std::size_t i = 0; i < d_conv1.values.size(); ++i) {
    const T h = cache.conv1_out.values[i];
    d_conv1.values[i] *= T(1) - h * h;
  }
  const T sign = fault == BackwardFault::ConvSignFlip ? T(-1) : T(1);
  conv_weight_gradient(patch.values.data(), patch.width, patch.height, model.conv1, d_conv1.values.data(),
                       grads.conv1_weights.data(), grads.conv1_biases.data(), sign);
  ++grads.sample_count;
  return loss;
}

template <typename T>
std::pair<T, BasicGradientBuffer<T>> net_backward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch,
                                                  T target) {
  BasicGradientBuffer<T> grads(model);
  const T loss = net_backward(model, patch, target, grads);
  return {loss, std::move(grads)};
}

void accumulate_and_step(NetworkModel& model, GradientBuffer& grads, float learning_rate) {
  if (grads.sample_count == 0) throw std::invalid_argument("accumulate_and_step: gradient buffer holds no samples");
  if (!grads.matches(model)) throw std::invalid_argument("accumulate_and_step: gradient buffer does not match model");
  const float count = static_cast<float>(grads.sample_count);
  auto step = [&](std::vector<float>& w, const std::vector<float>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * (g[i] / count);
  };
  step(model.conv1.weights, grads.conv1_weights);
  step(model.conv1.biases, grads.conv1_biases);
  step(model.conv2.weights, grads.conv2_weights);
  step(model.conv2.biases, grads.conv2_biases);
  step(model.fc.weights, grads.fc_weights);
  model.fc.bias -= learning_rate * (grads.fc_bias / count);
  grads.reset();
}

template struct BasicGradientBuffer<float>;
template struct BasicGradientBuffer<double>;
template float net_forward(const BasicNetworkModel<float>&, const BasicTensor3<float>&);
template double net_forward(const BasicNetworkModel<double>&, const BasicTensor3<double>&);
template float net_forward(const BasicNetworkModel<float>&, const BasicTensor3<float>&, BasicForwardCache<float>&);
template double net_forward(const BasicNetworkModel<double>&, const BasicTensor3<double>&,
                            BasicForwardCache<double>&);
template float net_backward(const BasicNetworkModel<float>&, const BasicTensor3<float>&, float,
                            BasicGradientBuffer<float>&, BackwardFault);
template double net_backward(const BasicNetworkModel<double>&, const BasicTensor3<double>&, double,
                             BasicGradientBuffer<double>&, BackwardFault);
template std::pair<float, BasicGradientBuffer<float>> net_backward(const BasicNetworkModel<float>&,
                                                                   const BasicTensor3<float>&, float);
template std::pair<double, BasicGradientBuffer<double>> net_backward(const BasicNetworkModel<double>&,
                                                                     const BasicTensor3<double>&, double);

}  // namespace pupilnet::nn
