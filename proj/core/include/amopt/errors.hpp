#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace amopt {

/// Configuration or input validation failure (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Schedule inconsistency, e.g. activating an unsupported element.
class ScheduleError : public std::runtime_error {
 public:
  explicit ScheduleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Nonlinear or linear solve failure (CLI exit code 3). Carries the residual
/// history of the failed Newton loop.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, std::vector<double> residual_history = {})
      : std::runtime_error(msg), history(std::move(residual_history)) {}
  std::vector<double> history;
};

}  // namespace amopt
