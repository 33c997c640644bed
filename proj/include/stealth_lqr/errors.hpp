#pragma once

#include <stdexcept>
#include <string>

namespace stealth_lqr {

/// Input data violates a documented invariant (dimension, symmetry, definiteness, range).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A recursion or factorization produced an unusable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stealth_lqr
