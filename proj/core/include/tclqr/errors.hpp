#pragma once

#include <stdexcept>
#include <string>

namespace tclqr {

// Bad dimensions, non-symmetric input where symmetry is required, indefinite
// cost blocks, negative weights and the like.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An SPD solve hit a non-positive pivot.  stage() is >= 0 when the failure
// happened inside a stage-indexed recursion, -1 otherwise.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& what, int stage = -1)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

// Config file problems.  field() holds a path like "coupling.Q[2]".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Numerical invariant violated mid-computation (asymmetry blowup, PSD loss).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tclqr
