#pragma once

#include <stdexcept>
#include <string>

namespace co2grav {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration value was violated.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Geometry that makes an operation ill-defined (mismatched grids,
/// out-of-bounds indices, a station sitting on a cell center).
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Per-map z-scoring of a map with zero variance.
class NormalizationError : public Error {
public:
  using Error::Error;
};

/// On-disk dataset problems.
class FormatError : public Error {
public:
  using Error::Error;
};

class ChecksumError : public FormatError {
public:
  using FormatError::FormatError;
};

class DimensionError : public FormatError {
public:
  using FormatError::FormatError;
};

} // namespace co2grav
