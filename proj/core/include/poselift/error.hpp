#pragma once

#include <stdexcept>
#include <string>

namespace poselift {

// Dimension/shape violations in tensor and module operations.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid model/training/skeleton configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text or binary data (skeleton files, datasets, checkpoints).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated operation contract (e.g. non-scalar loss handed to backward).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace poselift
