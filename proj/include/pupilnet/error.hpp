#pragma once

#include <stdexcept>
#include <string>

namespace pupilnet {

/// Base class for every recoverable failure raised by the library.
/// Precondition violations on plain arguments use std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pupilnet
