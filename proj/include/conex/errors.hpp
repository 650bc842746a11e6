#pragma once

#include <stdexcept>
#include <string>

namespace conex {

// Base of every error the library raises. `exit_code` is the CLI process
// status associated with the error category.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual int exit_code() const noexcept = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Caller broke an operation precondition (bad dimensions, index out of range).
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Malformed or truncated on-disk artifact.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class NonNegativityViolation : public DataError {
 public:
  using DataError::DataError;
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, int retries = 0)
      : Error(what), retries_(retries) {}
  int exit_code() const noexcept override { return 4; }
  int retries() const noexcept { return retries_; }

 private:
  int retries_;
};

}  // namespace conex
