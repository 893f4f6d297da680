#pragma once

#include <stdexcept>
#include <string>

namespace hifm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: shape mismatch, out-of-range parameter, asymmetric matrix.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite results, singular covariances, non-converging solvers.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Configuration outside an energy's domain (e.g. coincident particles).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated model / dataset files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Hessian has a negative eigenvalue beyond tolerance.
class NotMinimumError : public Error {
 public:
  using Error::Error;
};

}  // namespace hifm
