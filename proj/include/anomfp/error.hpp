#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace anomfp {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model parameters, grid sizes, tolerances or configuration values.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// beta == d + 1: logarithmic corrections appear and the construction is not valid.
class ExcludedCaseError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Sparse factorization of a discrete operator failed (singular or numerically broken).
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Two independent evaluations of the same quantity disagree beyond tolerance.
class CrossCheckError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure (root finder, time stepper) did not meet its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Grid does not cover the region required by the requested parameters.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Short scientific rendering for error messages.
inline std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

}  // namespace anomfp
