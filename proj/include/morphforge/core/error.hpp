#pragma once

#include <stdexcept>
#include <string>

namespace morphforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or conflicting configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Shape or cardinality mismatch between operands.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a solver that failed to converge (CLI exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace morphforge
