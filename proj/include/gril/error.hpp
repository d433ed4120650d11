#pragma once

#include <stdexcept>
#include <string>

namespace gril {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  ZeroVarianceColumn,
  NearDuplicatePredictors,
  DimensionTooSmall,
  NotSymmetric,
  NotPSD,
  DegenerateStep,
  MaxStepsExceeded,
  NoConvergence,
  AllCellsFailed,
  NotEquiCorrelated,
  SupportEmpty,
  ZeroQBeta,
  NTooSmall,
  LayoutImpossible,
  TooManyFailures,
  Io,
  Parse,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::NearDuplicatePredictors: return "NearDuplicatePredictors";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::DegenerateStep: return "DegenerateStep";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::AllCellsFailed: return "AllCellsFailed";
    case ErrorCode::NotEquiCorrelated: return "NotEquiCorrelated";
    case ErrorCode::SupportEmpty: return "SupportEmpty";
    case ErrorCode::ZeroQBeta: return "ZeroQBeta";
    case ErrorCode::NTooSmall: return "NTooSmall";
    case ErrorCode::LayoutImpossible: return "LayoutImpossible";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the condition;
/// `index_a()`/`index_b()` carry offending column indices where relevant
/// (-1 otherwise).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, int index_a = -1, int index_b = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code), index_a_(index_a), index_b_(index_b) {}

  ErrorCode code() const noexcept { return code_; }
  int index_a() const noexcept { return index_a_; }
  int index_b() const noexcept { return index_b_; }

  /// True for failures caused by the numbers rather than by how the caller
  /// used the API or the filesystem.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::DimensionMismatch:
      case ErrorCode::Io:
      case ErrorCode::Parse:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
  int index_a_;
  int index_b_;
};

}  // namespace gril
