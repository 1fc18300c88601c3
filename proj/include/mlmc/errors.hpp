#pragma once

#include <stdexcept>
#include <string>

namespace mlmc {

// Raised when user-supplied configuration is malformed or inconsistent.
// `code` is a stable machine-readable identifier (e.g. "config/unknown_key")
// and `field` names the offending entry when one can be identified.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string code, std::string field, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}

  const std::string& code() const { return code_; }
  const std::string& field() const { return field_; }

 private:
  std::string code_;
  std::string field_;
};

// Raised when a run cannot be planned (target accuracy infeasible on the
// configured grid, overflowing sample counts, invalid tolerances, ...).
class PlanningError : public std::runtime_error {
 public:
  PlanningError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace mlmc
