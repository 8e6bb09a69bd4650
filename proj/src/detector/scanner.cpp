#include "pupilnet/detector/scanner.hpp"

#include <stdexcept>
#include <string>

#include "pupilnet/nn/kernels.hpp"

namespace pupilnet::detector {

WindowScanner::WindowScanner(const nn::NetworkModel& model, const GrayImage& image)
    : WindowScanner(model, image, {0, 0}, {image.width - model.input_size, image.height - model.input_size}) {}

WindowScanner::WindowScanner(const nn::NetworkModel& model, const GrayImage& image, PixelPos top_left_min,
                             PixelPos top_left_max)
    : model_(&model), min_(top_left_min), max_(top_left_max) {
  const int s = model.input_size;
  if (min_.x < 0 || min_.y < 0 || max_.x < min_.x || max_.y < min_.y || max_.x + s > image.width ||
      max_.y + s > image.height) {
    throw std::invalid_argument("WindowScanner: window region does not fit inside the " +
                                std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
  }
  const int in_w = max_.x - min_.x + s;
  const int in_h = max_.y - min_.y + s;
  const auto& lut = nn::kernels::intensity_table();
  std::vector<float> input(static_cast<std::size_t>(in_w) * in_h);
  for (int y = 0; y < in_h; ++y)
    for (int x = 0; x < in_w; ++x) input[static_cast<std::size_t>(y) * in_w + x] = lut[image.at(min_.x + x, min_.y + y)];

  const auto& conv1 = model.conv1;
  const int cw = conv1.output_size(in_w);
  const int ch = conv1.output_size(in_h);
  std::vector<float> features(static_cast<std::size_t>(conv1.out_channels) * cw * ch);
  nn::kernels::conv_valid(input.data(), in_w, in_h, conv1, features.data());
  nn::kernels::tanh_inplace(features.data(), features.size());

  const int window = model.pool.window;
  box_width_ = cw - window + 1;
  box_height_ = ch - window + 1;
  box_.resize(static_cast<std::size_t>(conv1.out_channels) * box_width_ * box_height_);
  const float scale = nn::kernels::pool_scale<float>(model.pool);
  for (int c = 0; c < conv1.out_channels; ++c) {
    const float* plane = features.data() + static_cast<std::size_t>(c) * cw * ch;
    float* dst = box_.data() + static_cast<std::size_t>(c) * box_width_ * box_height_;
    for (int y = 0; y < box_height_; ++y)
      for (int x = 0; x < box_width_; ++x)
        dst[static_cast<std::size_t>(y) * box_width_ + x] = nn::kernels::block_sum(plane, cw, x, y, window) * scale;
  }
}

float WindowScanner::rate(int left, int top) const {
  if (left < min_.x || top < min_.y || left > max_.x || top > max_.y)
    throw std::out_of_range("WindowScanner::rate: window outside the prepared region");
  const auto& m = *model_;
  const int p = m.pool_output_size();
  const int k1 = m.conv1.out_channels;
  const int ox = left - min_.x;
  const int oy = top - min_.y;
  std::vector<float> pooled(static_cast<std::size_t>(k1) * p * p);
  for (int c = 0; c < k1; ++c) {
    const float* plane = box_.data() + static_cast<std::size_t>(c) * box_width_ * box_height_;
    for (int py = 0; py < p; ++py) {
      const float* row = plane + static_cast<std::size_t>(oy + py * m.pool.stride) * box_width_ + ox;
      for (int px = 0; px < p; ++px)
        pooled[(static_cast<std::size_t>(c) * p + py) * p + px] = row[px * m.pool.stride];
    }
  }
  const int o2 = m.conv2_output_size();
  std::vector<float> conv2_out(static_cast<std::size_t>(m.conv2.out_channels) * o2 * o2);
  return nn::kernels::head_forward(m, pooled.data(), p, conv2_out.data());
}

}  // namespace pupilnet::detector
