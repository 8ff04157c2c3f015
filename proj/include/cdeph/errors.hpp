#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdeph {

enum class ErrorCode {
  NotHermitian,
  MaskMismatch,
  DimensionMismatch,
  NotUnitVector,
  NotUnitary,
  OutOfGrid,
  InvalidSpectrum,
  InvalidState,
  ParamOutOfRange,
  Unsupported,
  InvalidArgument,
  SolverFailed,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::OutOfGrid: return "OutOfGrid";
    case ErrorCode::InvalidSpectrum: return "InvalidSpectrum";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SolverFailed: return "SolverFailed";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Configuration problems (bad input) versus numerical trouble.
  bool is_config_error() const noexcept {
    switch (code_) {
      case ErrorCode::SolverFailed:
      case ErrorCode::InvalidSpectrum:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cdeph
