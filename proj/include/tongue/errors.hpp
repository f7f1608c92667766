#pragma once

#include <stdexcept>
#include <string>

namespace tongue {

/// Base of every error raised by the library. `exit_code()` is the process
/// status the command-line tool reports for this error class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed input, violated precondition or inconsistent configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Tensor/vector dimensions that do not fit the operation.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Argument outside the mathematical domain of a function (alpha <= 0, bins < 2, ...).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Singular systems, non-invertible transforms, failed detections.
class DegeneracyError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace tongue
