#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cycloroute {

enum class ErrorCode {
  OutOfRange,
  MissingValue,
  InvalidArgument,
  DimensionMismatch,
  IsolatedSegment,
  ConvergenceFailure,
  DegenerateSpectrum,
  SeriesTooShort,
  InsufficientData,
  ColdStart,
  Unreachable,
  HorizonExceeded,
  CycleGuard,
  NoEligiblePairs,
  ParseError,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable error kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cycloroute
