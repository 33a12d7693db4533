#include "dampcert/errors.hpp"

namespace dampcert {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::TailNotConvergent: return "TailNotConvergent";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotDissipative: return "NotDissipative";
    case ErrorCode::NotControllable: return "NotControllable";
    case ErrorCode::NotStabilized: return "NotStabilized";
    case ErrorCode::NotDissipativeDiscretization: return "NotDissipativeDiscretization";
    case ErrorCode::WrongNormChoice: return "WrongNormChoice";
    case ErrorCode::MissingCS: return "MissingCS";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::StepRejectionLimit: return "StepRejectionLimit";
    case ErrorCode::ContractionViolation: return "ContractionViolation";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoLinearPhase: return "NoLinearPhase";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return 2;
    case ErrorCode::ValidationError: return 3;
    case ErrorCode::MissingInput: return 4;
    case ErrorCode::IoError: return 5;
    case ErrorCode::InvalidArgument: return 6;
    default: return 10;
  }
}

}  // namespace dampcert
