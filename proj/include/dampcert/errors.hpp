#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dampcert {

enum class ErrorCode {
  InvalidArgument,
  NotHurwitz,
  SingularSystem,
  Overflow,
  TailNotConvergent,
  DomainError,
  NotDissipative,
  NotControllable,
  NotStabilized,
  NotDissipativeDiscretization,
  WrongNormChoice,
  MissingCS,
  CalibrationFailed,
  StepRejectionLimit,
  ContractionViolation,
  InsufficientData,
  NoLinearPhase,
  ParseError,
  ValidationError,
  MissingInput,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Process exit status used by the CLI for each error code.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dampcert
