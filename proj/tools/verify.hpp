#pragma once

#include <cstdint>
#include <iosfwd>

#include "pupilnet/nn/network.hpp"

namespace pupilnet::tools {

struct VerifyOptions {
  int trials = 20;
  std::uint64_t seed = 1;
  double tolerance = 1e-3;
  nn::BackwardFault fault = nn::BackwardFault::None;
};

/// Gradient checks for all five configurations plus the detector's
/// window-scan and refinement self-checks. Returns true when all pass.
bool run_verify(const VerifyOptions& options, std::ostream& out);

}  // namespace pupilnet::tools
