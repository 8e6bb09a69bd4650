#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pupilnet::nn {

/// Dense feature map stored channel-major: index = (c * height + y) * width + x.
template <typename T>
struct BasicTensor3 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> values;

  BasicTensor3() = default;
  BasicTensor3(int w, int h, int c, T fill = T(0)) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1 || c < 1) throw std::invalid_argument("Tensor3: every dimension must be >= 1");
    values.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
  T* plane(int c) { return values.data() + c * plane_size(); }
  const T* plane(int c) const { return values.data() + c * plane_size(); }
  T& at(int c, int y, int x) { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  T at(int c, int y, int x) const { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  template <typename U>
  BasicTensor3<U> cast() const {
    BasicTensor3<U> out;
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.values.assign(values.begin(), values.end());
    return out;
  }

  friend bool operator==(const BasicTensor3&, const BasicTensor3&) = default;
};

using Tensor3 = BasicTensor3<float>;

}  // namespace pupilnet::nn
