#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pupilnet/nn/tensor.hpp"

namespace pupilnet::nn {

/// The five network configurations. Coarse nets rate 24x24 windows of the
/// 4x-downscaled image, Fine rates 89x89 full-resolution windows and SK8P8
/// rates 25x25 downscaled windows for single-stage detection.
enum class ConfigName { CK8P8, CK8P16, CK16P32, Fine, SK8P8 };

std::string_view to_string(ConfigName name);
/// Case-insensitive; accepts "F" as an alias of "FINE". Throws std::invalid_argument.
ConfigName parse_config_name(std::string_view text);
std::span<const ConfigName> all_configs();

enum class Activation { Tanh, Logistic };

/// Square valid convolution, stride 1, no padding.
/// Weights are laid out [out][in][row][col].
template <typename T>
struct BasicConvLayer {
  int filter_size = 0;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<T> weights;
  std::vector<T> biases;

  int output_size(int input_size) const { return input_size - filter_size + 1; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * filter_size * filter_size;
  }
  T& weight(int o, int i, int r, int c) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * filter_size + r) * filter_size + c];
  }
  T weight(int o, int i, int r, int c) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * filter_size + r) * filter_size + c];
  }

  friend bool operator==(const BasicConvLayer&, const BasicConvLayer&) = default;
};

/// Parameter-free average pooling.
struct AvgPoolLayer {
  int window = 0;
  int stride = 0;

  int output_size(int input_size) const { return (input_size - window) / stride + 1; }
  friend bool operator==(const AvgPoolLayer&, const AvgPoolLayer&) = default;
};

/// Single perceptron over the 1x1xK output of the second convolution.
template <typename T>
struct BasicFCLayer {
  int in_count = 0;
  std::vector<T> weights;
  T bias = T(0);

  friend bool operator==(const BasicFCLayer&, const BasicFCLayer&) = default;
};

/// conv1 -> tanh -> avg-pool -> conv2 -> tanh -> fully connected -> logistic.
template <typename T>
struct BasicNetworkModel {
  ConfigName config = ConfigName::CK8P8;
  int input_size = 0;
  BasicConvLayer<T> conv1;
  AvgPoolLayer pool;
  BasicConvLayer<T> conv2;
  BasicFCLayer<T> fc;

  static constexpr Activation hidden_activation = Activation::Tanh;
  static constexpr Activation output_activation = Activation::Logistic;

  int conv1_output_size() const { return conv1.output_size(input_size); }
  int pool_output_size() const { return pool.output_size(conv1_output_size()); }
  int conv2_output_size() const { return conv2.output_size(pool_output_size()); }
  std::size_t parameter_count() const {
    return conv1.weights.size() + conv1.biases.size() + conv2.weights.size() + conv2.biases.size() +
           fc.weights.size() + 1;
  }

  template <typename U>
  BasicNetworkModel<U> cast() const {
    BasicNetworkModel<U> out;
    out.config = config;
    out.input_size = input_size;
    out.pool = pool;
    auto conv = [](const BasicConvLayer<T>& src, BasicConvLayer<U>& dst) {
      dst.filter_size = src.filter_size;
      dst.in_channels = src.in_channels;
      dst.out_channels = src.out_channels;
      dst.weights.assign(src.weights.begin(), src.weights.end());
      dst.biases.assign(src.biases.begin(), src.biases.end());
    };
    conv(conv1, out.conv1);
    conv(conv2, out.conv2);
    out.fc.in_count = fc.in_count;
    out.fc.weights.assign(fc.weights.begin(), fc.weights.end());
    out.fc.bias = static_cast<U>(fc.bias);
    return out;
  }

  friend bool operator==(const BasicNetworkModel&, const BasicNetworkModel&) = default;
};

using ConvLayer = BasicConvLayer<float>;
using FCLayer = BasicFCLayer<float>;
using NetworkModel = BasicNetworkModel<float>;

/// Gradient accumulator congruent with a model's parameters.
template <typename T>
struct BasicGradientBuffer {
  std::vector<T> conv1_weights;
  std::vector<T> conv1_biases;
  std::vector<T> conv2_weights;
  std::vector<T> conv2_biases;
  std::vector<T> fc_weights;
  T fc_bias = T(0);
  std::size_t sample_count = 0;

  BasicGradientBuffer() = default;
  explicit BasicGradientBuffer(const BasicNetworkModel<T>& model);

  void reset();
  /// Element-wise sum, including sample counts. Shapes must match.
  void add(const BasicGradientBuffer& other);
  bool matches(const BasicNetworkModel<T>& model) const;
};

using GradientBuffer = BasicGradientBuffer<float>;

/// Intermediate activations kept by the forward pass for backpropagation.
template <typename T>
struct BasicForwardCache {
  BasicTensor3<T> conv1_out;  // tanh applied
  BasicTensor3<T> pooled;
  BasicTensor3<T> conv2_out;  // tanh applied
  T rating = T(0);
};

/// Fault injection for the gradient-check negative controls.
enum class BackwardFault {
  None,
  ConvSignFlip,    // first convolution weight gradients negated
  PoolNoScaling,   // pooling backward forgets the 1/window^2 factor
};

/// Builds the unweighted skeleton (all parameters zero) of a configuration.
NetworkModel build_config(ConfigName name);

/// Draws every weight from N(0, 0.01^2) and zeroes the biases.
NetworkModel init_model(NetworkModel model, std::uint64_t seed);

/// Rating in [0, 1] for a single input_size x input_size x 1 patch.
template <typename T>
T net_forward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch);
template <typename T>
T net_forward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch, BasicForwardCache<T>& cache);

/// Adds the gradient of 0.5 * (rating - target)^2 for one sample to `grads`
/// and returns the loss.
template <typename T>
T net_backward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch, T target,
               BasicGradientBuffer<T>& grads, BackwardFault fault = BackwardFault::None);

/// Convenience form returning a fresh single-sample buffer.
template <typename T>
std::pair<T, BasicGradientBuffer<T>> net_backward(const BasicNetworkModel<T>& model, const BasicTensor3<T>& patch,
                                                  T target);

/// w <- w - learning_rate * (accumulated / sample_count), then resets the buffer.
void accumulate_and_step(NetworkModel& model, GradientBuffer& grads, float learning_rate);

/// Validates layer dimensions against the named configuration; throws
/// std::invalid_argument describing the first mismatch.
void validate_architecture(const NetworkModel& model);

}  // namespace pupilnet::nn
