#pragma once

#include <stdexcept>
#include <string>

namespace npulse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, schema violation or out-of-contract argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, divergence, failed fits.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace npulse
