#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "pupilnet/nn/network.hpp"

namespace pupilnet::nn {

struct GradCheckOptions {
  double epsilon = 1e-4;
  /// Denominator floor for the relative error so that two vanishing
  /// gradients do not register as a mismatch.
  double magnitude_floor = 1e-9;
  BackwardFault fault = BackwardFault::None;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;  // e.g. "conv1.weights[17]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t parameters_checked = 0;
};

/// Compares the analytic gradient (double-precision instantiation of
/// net_backward) with central finite differences over every parameter.
/// The finite differences come from an independent naive forward pass.
/// Relative error per parameter is |a - n| / max(|a|, |n|, magnitude_floor).
GradCheckReport grad_check(const NetworkModel& model, const Tensor3& patch, float target,
                           const GradCheckOptions& options = {});

/// Straightforward nested-loop forward pass in double precision, independent
/// of the optimized kernels. Used as the finite-difference oracle.
double reference_forward(const BasicNetworkModel<double>& model, const BasicTensor3<double>& patch);

/// Model with fan-in scaled Gaussian weights and random biases, large enough
/// to drive the hidden units into their nonlinear range.
NetworkModel random_model(ConfigName config, std::uint64_t seed);

/// input_size x input_size x 1 patch with uniform values in [0, 1].
Tensor3 random_patch(int size, std::uint64_t seed);

}  // namespace pupilnet::nn
