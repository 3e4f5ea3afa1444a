#pragma once

#include <stdexcept>
#include <string>

namespace noisecal {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that are zero-sized or do not match.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A scalar argument outside its documented range (timestep, ν, β, η...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// NaN or Inf produced by an operation.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Filesystem failures: missing files, unwritable paths.
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
public:
  using Error::Error;
};

class BadMagicError : public FormatError {
public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
  using FormatError::FormatError;
};

/// Invalid run configuration (unknown keys, wrong types, out-of-range values).
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace noisecal
