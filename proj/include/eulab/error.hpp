// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eulab {

enum class ErrorCode {
  NonZeroMean,
  NotSolenoidal,
  GridMismatch,
  BadRadius,
  ZeroVector,
  RankDeficient,
  OutsideBall,
  ConjugationViolated,
  CflFailure,
  DegenerateReynolds,
  ResidualExceeded,
  AlphaOutOfRange,
  MismatchExceeded,
  TuningFailure,
  Unstable,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library's error kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::NotSolenoidal: return "NotSolenoidal";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::BadRadius: return "BadRadius";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::OutsideBall: return "OutsideBall";
    case ErrorCode::ConjugationViolated: return "ConjugationViolated";
    case ErrorCode::CflFailure: return "CflFailure";
    case ErrorCode::DegenerateReynolds: return "DegenerateReynolds";
    case ErrorCode::ResidualExceeded: return "ResidualExceeded";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::MismatchExceeded: return "MismatchExceeded";
    case ErrorCode::TuningFailure: return "TuningFailure";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace eulab
