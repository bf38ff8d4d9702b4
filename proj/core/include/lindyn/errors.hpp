#pragma once

#include <stdexcept>
#include <string>

namespace lindyn {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or value precondition violated (dimension mismatch, empty input, ...).
struct ShapeError : Error {
  using Error::Error;
};

/// Operation not defined for the requested model family.
struct UnsupportedFamilyError : Error {
  using Error::Error;
};

/// Requested balance constant and norm cannot be realized simultaneously.
struct InfeasibleInitError : Error {
  using Error::Error;
};

/// Initialization sits on a measure-zero degenerate manifold of the closed form.
struct DegenerateInitError : Error {
  using Error::Error;
};

/// Scalar argument outside the domain of a closed-form expression.
struct DomainError : Error {
  using Error::Error;
};

/// Closed form is only available in the solved limiting regimes.
struct UnsupportedRegimeError : Error {
  using Error::Error;
};

/// Training budget exhausted before reaching the requested loss.
struct NonConvergenceError : Error {
  using Error::Error;
};

/// Class geometry collapsed to a point; angular metrics are undefined.
struct DegenerateGeometryError : Error {
  using Error::Error;
};

/// Kernel matrix has zero norm; the relative distance is undefined.
struct DegenerateKernelError : Error {
  using Error::Error;
};

/// Input data file is malformed or inconsistent.
struct DataError : Error {
  using Error::Error;
};

/// Experiment configuration is invalid; message names the failing JSON pointer.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace lindyn
