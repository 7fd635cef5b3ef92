#include "rigidity/errors.hpp"

namespace rigidity {

const char* to_string(NumericalFailure kind) {
  switch (kind) {
    case NumericalFailure::kNoConvergence: return "NoConvergence";
    case NumericalFailure::kSingularJacobian: return "SingularJacobian";
    case NumericalFailure::kInvalidBracket: return "InvalidBracket";
    case NumericalFailure::kBranchLost: return "BranchLost";
    case NumericalFailure::kFellBackToConstant: return "FellBackToConstant";
    case NumericalFailure::kOverflow: return "Overflow";
    case NumericalFailure::kZeroField: return "ZeroField";
  }
  return "Unknown";
}

NumericalError::NumericalError(NumericalFailure kind, const std::string& what,
                               double last_residual)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind),
      last_residual_(last_residual) {}

}  // namespace rigidity
