#pragma once

#include <stdexcept>
#include <string>

namespace trajq {

// Inputs with inconsistent dimensions or invalid parameters.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeError : ValidationError {
  using ValidationError::ValidationError;
};

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Search space or problem size exceeds a configured limit.
struct GuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace trajq
