#pragma once

#include <stdexcept>
#include <string>

namespace easlab {

// Thrown when a caller violates an operation's precondition
// (bad shapes, out-of-range parameters, degenerate inputs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// I/O and format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure detected at run time (divergence, non-finite values).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace easlab
