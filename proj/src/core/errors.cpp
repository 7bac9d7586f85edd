#include "cycloroute/core/errors.hpp"

namespace cycloroute {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IsolatedSegment: return "IsolatedSegment";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ColdStart: return "ColdStart";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::CycleGuard: return "CycleGuard";
    case ErrorCode::NoEligiblePairs: return "NoEligiblePairs";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace cycloroute
