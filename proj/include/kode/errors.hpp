#pragma once

#include <stdexcept>
#include <string>

namespace kode {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or size mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// A scalar or structural argument violates a documented precondition.
struct ParameterError : Error {
  using Error::Error;
};

// Malformed caller input: bad indices, missing data, non-finite values.
struct InputError : Error {
  using Error::Error;
};

// The dynamics matrix is not stable (spectral radius >= 1).
struct InstabilityError : Error {
  using Error::Error;
};

// An iterative solver ran out of iterations; carries the last residual.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), residual(last_residual) {}
  double residual;
};

// A dense kernel (eigenvalue iteration, factorization) failed internally.
struct NumericError : Error {
  using Error::Error;
};

// Malformed configuration or instance document.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace kode
