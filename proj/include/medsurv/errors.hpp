#pragma once

#include <stdexcept>
#include <string>

namespace medsurv {

// Bad flags, invalid configuration values, violated call preconditions.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or domain-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failed numerical procedure (non-PD matrix, rank deficiency, divergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process exit codes used by the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

}  // namespace medsurv
