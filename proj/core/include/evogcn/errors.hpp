#pragma once

#include <stdexcept>
#include <string>

namespace evogcn {

// Stable exit-code contract for the CLI.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode exit_code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad configuration (unknown key, invalid value, inconsistent split, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

// Bad input data (parse failures, missing files, label inconsistencies).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

// Caller passed an empty or out-of-range argument.
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ExitCode::data, what) {}
};

// Negative sampling could not find enough non-edges.
class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error(ExitCode::data, what) {}
};

// Matrix shape mismatch; the message names both shapes.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

// Non-finite values, vanishing norms and similar numeric failures.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

}  // namespace evogcn
