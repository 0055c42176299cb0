#pragma once

#include <stdexcept>
#include <string>

namespace prnn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not line up (matmul inner dims, channel counts, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Posterior normalizer vanished (e.g. an all-zero bridging-matrix column).
class DegeneratePosteriorError : public Error {
 public:
  using Error::Error;
};

/// A loss or likelihood became NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace prnn
