#pragma once

#include <stdexcept>
#include <string>

namespace grcan {

// Common base so callers can catch any library error in one handler.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shapes or widths that do not line up.
class DimensionError : public Error {
public:
  using Error::Error;
};

// A scalar argument outside its valid range (window <= 0, rho <= 0, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

// An operation invoked out of order (backward before forward, boost stage
// stepped before its predecessors, missing gradients).
class StateError : public Error {
public:
  using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Bad values inside otherwise well-formed data (out-of-range label, ...).
class DataError : public Error {
public:
  using Error::Error;
};

// A file that fails to parse; message carries the line number.
class LoadError : public Error {
public:
  using Error::Error;
};

// Wrong magic or container layout.
class FormatError : public Error {
public:
  using Error::Error;
};

// Payload shorter than its declared extent.
class LengthError : public Error {
public:
  using Error::Error;
};

// Filesystem failures; message carries the path.
class IoError : public Error {
public:
  using Error::Error;
};

// Checkpoint integrity check failed.
class ChecksumError : public Error {
public:
  using Error::Error;
};

// Checkpoint written by an incompatible format version.
class VersionError : public Error {
public:
  using Error::Error;
};

// Training produced a non-finite loss; message names epoch and batch.
class DivergenceError : public Error {
public:
  using Error::Error;
};

}  // namespace grcan
