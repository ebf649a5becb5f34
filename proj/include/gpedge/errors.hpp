#pragma once

#include <stdexcept>
#include <string>

namespace gpedge {

// Invalid user-supplied configuration (bad hyperparameters, malformed config keys).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / format failures; message names the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical conditioning failures; message names the offending matrix.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every sampled posterior curve scored zero gradient response.
class LostEdgeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace gpedge
