#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace yudo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the documented domain of an operation.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Input data (a field, a file, a run) violates a structural precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Singular kernel evaluated at coincident points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Two trajectories cannot be compared (different particles or time grids).
class IncompatibleRuns : public Error {
 public:
  using Error::Error;
};

/// Non-finite particle positions during time stepping.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(std::size_t step, const std::string& what)
      : Error("numerical blow-up at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace yudo
