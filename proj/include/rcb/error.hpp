#pragma once

#include <stdexcept>
#include <string>

namespace rcb {

enum class ErrorCode {
  // validation
  AlphaOutOfRange,
  NegativeDrift,
  NonPositiveScale,
  InvalidInitialState,
  InvalidGrid,
  DomainError,
  GridMismatch,
  EmptySample,
  DegeneratePath,
  SubcriticalRateError,
  // numerical
  ConvergenceFailure,
  QuadratureFailure,
  PicardDivergence,
  PoleError,
  SingularStep,
  MemoryBudgetExceeded,
  PathBudgetExceeded,
};

const char* to_string(ErrorCode code);

/// True for codes that signal bad input rather than a numerical breakdown.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rcb
