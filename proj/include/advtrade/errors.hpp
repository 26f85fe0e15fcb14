#pragma once

#include <stdexcept>
#include <string>

namespace advtrade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, negative budget, nonpositive scale.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but outside the region where the operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its budget.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// The saddle point touched an artificial box constraint.
class BoxTooSmall : public Error {
 public:
  using Error::Error;
};

/// A quantity that the math guarantees could not be produced (e.g. a negative
/// discriminant).
class InternalConsistency : public Error {
 public:
  using Error::Error;
};

}  // namespace advtrade
