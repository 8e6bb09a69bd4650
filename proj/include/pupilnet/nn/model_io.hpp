#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pupilnet/error.hpp"
#include "pupilnet/nn/network.hpp"

namespace pupilnet::nn {

// PNETv1 layout (all integers and floats little-endian):
//   6 bytes   ASCII "PNETv1"
//   u8        length L of the configuration name, then L ASCII bytes
//   u32       input size
//   u32 x 3   conv1 filter size, input channels, output channels
//   u32 x 2   pooling window, pooling stride
//   u32 x 3   conv2 filter size, input channels, output channels
//   u32       fully connected input count
//   f32 ...   conv1 weights [out][in][row][col], conv1 biases,
//             conv2 weights [out][in][row][col], conv2 biases,
//             fc weights, fc bias
// Nothing may follow the last float.

enum class ModelFormatErrc {
  BadMagic,
  Truncated,
  UnknownConfig,
  DimensionMismatch,
  TrailingData,
  Io,
};

class ModelFormatError : public Error {
 public:
  ModelFormatError(ModelFormatErrc code, const std::string& what) : Error(what), code_(code) {}
  ModelFormatErrc code() const { return code_; }

 private:
  ModelFormatErrc code_;
};

std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
NetworkModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_model(const std::filesystem::path& path);

}  // namespace pupilnet::nn
