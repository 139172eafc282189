#pragma once

#include <stdexcept>
#include <string>

namespace jmcert {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or mode-count mismatch, zero modes, non-square input.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside the documented range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested ordering makes the defining Gaussian integral diverge.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A numerical quadrature or Fock truncation is not resolved.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace jmcert
