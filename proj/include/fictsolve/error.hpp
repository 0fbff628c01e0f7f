#pragma once

#include <stdexcept>
#include <string>

namespace fictsolve {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (e.g. a point outside the unit square).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation called with the wrong kind of object (e.g. a curve space for stiffness).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Immersed geometry not contained in the background domain.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Incomplete or dense factorization failed.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Iteration cap hit inside a dense eigensolver.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fictsolve
