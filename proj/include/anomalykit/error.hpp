/// @file error.hpp
/// @brief Exception hierarchy shared by all anomalykit modules.
#pragma once

#include <stdexcept>
#include <string>

namespace anomalykit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing configuration, bad arguments, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid geometry: degenerate shapes, inclusions touching the outer wall,
/// non-convex corners.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a solver (non-finite values, divergence,
/// nonconvergent refinement).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Two measurement sets whose layouts cannot be compared.
class LayoutMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace anomalykit
