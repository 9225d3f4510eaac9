#pragma once

#include <stdexcept>
#include <string>

namespace riskprop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or Inf appeared in a forward or backward pass.
class NumericFault : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message carries the path and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Configuration failed validation; the message lists every offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskprop
