#pragma once

#include <stdexcept>
#include <string>

namespace tsquant {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, malformed, or unusable input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters: bad enum names, non-positive widths, B < 2, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// MASE is undefined because the in-sample seasonal naive error is zero.
class ZeroSeasonalError : public Error {
 public:
  ZeroSeasonalError() : Error("seasonal error is zero; MASE undefined") {}
};

}  // namespace tsquant
