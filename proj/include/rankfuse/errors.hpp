#pragma once

#include <stdexcept>
#include <string>

namespace rankfuse {

// Process exit codes shared by every subcommand.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Invalid argument supplied by the caller (bad flag value, bad parameter).
class ArgumentError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

// Inputs that are individually valid but do not fit together, e.g. a theta
// checkpoint whose model order differs from the prediction lists.
class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

// A computation that is mathematically undefined for the given input
// (degenerate likelihood, all-zero fingerprints, empty training signal).
class DegeneracyError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumerical; }
};

}  // namespace rankfuse
