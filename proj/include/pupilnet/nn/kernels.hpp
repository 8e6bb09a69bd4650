#pragma once

// Arithmetic primitives shared by the per-patch forward pass and the
// detector's shared-feature window scanner. Both paths must produce
// bit-identical ratings, so every output element is computed with the same
// operation order no matter how large the surrounding buffer is.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pupilnet/nn/network.hpp"

namespace pupilnet::nn::kernels {

/// 8-bit intensity -> network input, p / 255.
inline const std::array<float, 256>& intensity_table() {
  static const std::array<float, 256> table = [] {
    std::array<float, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = static_cast<float>(i) / 255.0f;
    return t;
  }();
  return table;
}

/// Valid convolution over a channel-major input of in_w x in_h x in_channels.
/// Output element (k, y, x) = sum over (c, r, s) in ascending order of
/// w[k][c][r][s] * in[c][y + r][x + s], then + bias[k].
template <typename T>
void conv_valid(const T* in, int in_w, int in_h, const BasicConvLayer<T>& layer, T* out) {
  const int f = layer.filter_size;
  const int ow = in_w - f + 1;
  const int oh = in_h - f + 1;
  const std::size_t in_plane = static_cast<std::size_t>(in_w) * in_h;
  const std::size_t out_plane = static_cast<std::size_t>(ow) * oh;
  for (int k = 0; k < layer.out_channels; ++k) {
    T* o = out + k * out_plane;
    for (std::size_t n = 0; n < out_plane; ++n) o[n] = T(0);
    for (int c = 0; c < layer.in_channels; ++c) {
      const T* src_plane = in + c * in_plane;
      for (int r = 0; r < f; ++r) {
        for (int s = 0; s < f; ++s) {
          const T w = layer.weight(k, c, r, s);
          for (int y = 0; y < oh; ++y) {
            const T* src = src_plane + static_cast<std::size_t>(y + r) * in_w + s;
            T* dst = o + static_cast<std::size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) dst[x] += w * src[x];
          }
        }
      }
    }
    const T b = layer.biases[k];
    for (std::size_t n = 0; n < out_plane; ++n) o[n] += b;
  }
}

template <typename T>
void tanh_inplace(T* values, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) values[i] = std::tanh(values[i]);
}

template <typename T>
T logistic(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

/// Sum of the window x window block with top-left (x, y), rows outer.
template <typename T>
T block_sum(const T* plane, int row_stride, int x, int y, int window) {
  T sum = T(0);
  for (int a = 0; a < window; ++a) {
    const T* row = plane + static_cast<std::size_t>(y + a) * row_stride + x;
    for (int b = 0; b < window; ++b) sum += row[b];
  }
  return sum;
}

template <typename T>
T pool_scale(const AvgPoolLayer& pool) {
  return T(1) / static_cast<T>(pool.window * pool.window);
}

/// Second convolution, tanh, perceptron and logistic output on a pooled map
/// of pool_size x pool_size x conv1.out_channels. conv2_out receives the
/// tanh-activated second-layer features (out_channels * out_size^2 values).
template <typename T>
T head_forward(const BasicNetworkModel<T>& model, const T* pooled, int pool_size, T* conv2_out) {
  conv_valid(pooled, pool_size, pool_size, model.conv2, conv2_out);
  const int o2 = model.conv2.output_size(pool_size);
  const std::size_t n2 = static_cast<std::size_t>(model.conv2.out_channels) * o2 * o2;
  tanh_inplace(conv2_out, n2);
  T z = T(0);
  for (std::size_t i = 0; i < n2; ++i) z += model.fc.weights[i] * conv2_out[i];
  z += model.fc.bias;
  return logistic(z);
}

}  // namespace pupilnet::nn::kernels
