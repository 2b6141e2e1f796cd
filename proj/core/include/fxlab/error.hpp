#pragma once

#include <stdexcept>
#include <string>

namespace fxlab {

// Base error for everything raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed files, invalid configuration values,
// references to things that do not exist. CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Raised when a harness ends up with no usable model rows (every row
// failed, or too few survived for the requested statistic). CLI maps this
// to exit code 2.
class AllFailedError : public Error {
 public:
  explicit AllFailedError(const std::string& what) : Error(what) {}
};

}  // namespace fxlab
