#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unsupported configuration (counts, shapes, missing keys).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A point that is neither inside the domain nor on its boundary.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Kernel evaluated at (numerically) coincident points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value or solver failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Missing or inconsistent boundary/medium data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Precondition of an API call was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed boundary-data file; carries the 1-based data row (0 = header).
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace bcid
