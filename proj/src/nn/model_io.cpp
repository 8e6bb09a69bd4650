#include "pupilnet/nn/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace pupilnet::nn {

namespace {

constexpr std::array<char, 6> kMagic{'P', 'N', 'E', 'T', 'v', '1'};

static_assert(sizeof(float) == 4);

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void floats(const std::vector<float>& values) {
    for (float v : values) f32(v);
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n)
      throw ModelFormatError(ModelFormatErrc::Truncated, std::string("truncated stream while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  void floats(std::vector<float>& values, const char* what) {
    need(values.size() * 4, what);
    for (auto& v : values) v = f32(what);
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void mismatch(const std::string& what) {
  throw ModelFormatError(ModelFormatErrc::DimensionMismatch, "dimension mismatch: " + what);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  validate_architecture(model);
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  const std::string_view name = to_string(model.config);
  w.u8(static_cast<std::uint8_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u32(static_cast<std::uint32_t>(model.input_size));
  w.u32(model.conv1.filter_size);
  w.u32(model.conv1.in_channels);
  w.u32(model.conv1.out_channels);
  w.u32(model.pool.window);
  w.u32(model.pool.stride);
  w.u32(model.conv2.filter_size);
  w.u32(model.conv2.in_channels);
  w.u32(model.conv2.out_channels);
  w.u32(model.fc.in_count);
  w.floats(model.conv1.weights);
  w.floats(model.conv1.biases);
  w.floats(model.conv2.weights);
  w.floats(model.conv2.biases);
  w.floats(model.fc.weights);
  w.f32(model.fc.bias);
  return w.take();
}

NetworkModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw ModelFormatError(ModelFormatErrc::BadMagic, "bad magic: not a PNETv1 model");
  r.take(kMagic.size(), "magic");
  const std::uint8_t name_len = r.u8("configuration name length");
  const auto name_bytes = r.take(name_len, "configuration name");
  const std::string name(name_bytes.begin(), name_bytes.end());
  NetworkModel model;
  try {
    model = build_config(parse_config_name(name));
  } catch (const std::invalid_argument&) {
    throw ModelFormatError(ModelFormatErrc::UnknownConfig, "unknown configuration '" + name + "'");
  }

  auto expect = [&](const char* what, int expected) {
    const std::uint32_t got = r.u32(what);
    if (got != static_cast<std::uint32_t>(expected))
      mismatch(std::string(what) + " is " + std::to_string(got) + " but " + name + " requires " +
               std::to_string(expected));
  };
  expect("input size", model.input_size);
  expect("conv1 filter size", model.conv1.filter_size);
  expect("conv1 input channels", model.conv1.in_channels);
  expect("conv1 kernels", model.conv1.out_channels);
  expect("pooling window", model.pool.window);
  expect("pooling stride", model.pool.stride);
  expect("conv2 filter size", model.conv2.filter_size);
  expect("conv2 input channels", model.conv2.in_channels);
  expect("conv2 kernels", model.conv2.out_channels);
  expect("fully connected inputs", model.fc.in_count);

  r.floats(model.conv1.weights, "conv1 weights");
  r.floats(model.conv1.biases, "conv1 biases");
  r.floats(model.conv2.weights, "conv2 weights");
  r.floats(model.conv2.biases, "conv2 biases");
  r.floats(model.fc.weights, "fc weights");
  model.fc.bias = r.f32("fc bias");
  if (!r.exhausted()) throw ModelFormatError(ModelFormatErrc::TrailingData, "unexpected bytes after model data");
  return model;
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError(ModelFormatErrc::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError(ModelFormatErrc::Io, "failed writing '" + path.string() + "'");
}

NetworkModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(ModelFormatErrc::Io, "cannot open model file '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace pupilnet::nn
