#pragma once

#include <stdexcept>
#include <string>

namespace anicemc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: shape mismatches, bad hyperparameters, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. calling backward on a non-scalar node.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required (gradients, losses).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Filesystem and serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset input. Carries the 1-based row number of the offending line.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace anicemc
