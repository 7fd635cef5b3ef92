#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace rigidity {

/// Bad parameters or configuration (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, written or parsed (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NumericalFailure {
  kNoConvergence,
  kSingularJacobian,
  kInvalidBracket,
  kBranchLost,
  kFellBackToConstant,
  kOverflow,
  kZeroField,
};

const char* to_string(NumericalFailure kind);

/// Solver-level failure (CLI exit code 3). `last_residual` is NaN when the
/// failing routine has no residual to report.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(NumericalFailure kind, const std::string& what,
                 double last_residual = std::numeric_limits<double>::quiet_NaN());

  NumericalFailure kind() const noexcept { return kind_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  NumericalFailure kind_;
  double last_residual_;
};

}  // namespace rigidity
