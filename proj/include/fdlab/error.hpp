#pragma once

#include <stdexcept>
#include <string>

namespace fdlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two objects built on different grids were combined.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// The requested quantity cannot be resolved on the given grid.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, double attainable)
      : Error(what), attainable_(attainable) {}

  /// Smallest admissible value of the offending parameter (e.g. minimum time).
  double attainable() const noexcept { return attainable_; }

 private:
  double attainable_;
};

/// An iterative method did not reach its target within budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdlab
