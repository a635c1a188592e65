#pragma once

#include <stdexcept>

namespace geonum {

/// Violated precondition or malformed input. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that could not complete: infeasible enumeration, sampler
/// failure, numerical breakdown. The CLI maps this to exit code 2.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geonum
