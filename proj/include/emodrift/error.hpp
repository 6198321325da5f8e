#pragma once

#include <stdexcept>
#include <string>

namespace emodrift {

// Base for every error raised by the library. The CLI maps the subclasses
// onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace emodrift
