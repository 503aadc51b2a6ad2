#pragma once

#include <stdexcept>
#include <string>

namespace coach {

/// Invalid model, dataset, or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-convergence or a zero-probability observation. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialized input (dataset, model, CSV).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace coach
