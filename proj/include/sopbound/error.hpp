#pragma once

#include <stdexcept>
#include <string>

namespace sopbound {

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 2 and everything numerical to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Sizes or shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Overflow, singular solves, unreliable quadrature and similar failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The contour passes through (or too close to) the pencil spectrum.
class ContourTouchesSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The quadrature did not converge to an integer count.
class UnreliableCount : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sopbound
