#pragma once

#include <stdexcept>
#include <string>

namespace cslr {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent or unsupported configuration (bad sizes, missing fields,
/// unsupported operator structure).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or mismatched data (file format, grid boxes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a solver.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A dense oracle would exceed its memory budget.
class BudgetError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace cslr
