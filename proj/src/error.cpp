#include "rcb/error.hpp"

namespace rcb {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::NegativeDrift: return "NegativeDrift";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::InvalidInitialState: return "InvalidInitialState";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DegeneratePath: return "DegeneratePath";
    case ErrorCode::SubcriticalRateError: return "SubcriticalRateError";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::PicardDivergence: return "PicardDivergence";
    case ErrorCode::PoleError: return "PoleError";
    case ErrorCode::SingularStep: return "SingularStep";
    case ErrorCode::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorCode::PathBudgetExceeded: return "PathBudgetExceeded";
  }
  return "UnknownError";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::AlphaOutOfRange:
    case ErrorCode::NegativeDrift:
    case ErrorCode::NonPositiveScale:
    case ErrorCode::InvalidInitialState:
    case ErrorCode::InvalidGrid:
    case ErrorCode::DomainError:
    case ErrorCode::GridMismatch:
    case ErrorCode::EmptySample:
    case ErrorCode::DegeneratePath:
    case ErrorCode::SubcriticalRateError:
      return true;
    default:
      return false;
  }
}

}  // namespace rcb
