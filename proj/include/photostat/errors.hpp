#pragma once

#include <stdexcept>
#include <string>

namespace photostat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical evaluation could not reach the requested accuracy.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// Post-selection produced (numerically) zero success probability.
class NoSupportError : public PrecisionError {
 public:
  using PrecisionError::PrecisionError;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace photostat
