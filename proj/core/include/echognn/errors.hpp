#pragma once

#include <stdexcept>
#include <string>

namespace echognn {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A forward value or loss became NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (layer geometry, generator params, config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk container (bad magic, version, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace echognn
