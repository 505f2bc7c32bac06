#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgeqoe {

enum class ErrorCode {
  InvalidArgument,
  DegenerateGeometry,
  NegativeEffectivePotential,
  SingularOrientation,
  HyperbolicBranch,
  InconsistentPotential,
  EccentricitySingularity,
  Proximity,
  OutOfRange,
  UnknownBody,
  StepFailure,
  DegenerateCovariance,
  InvalidMoments,
  GridMismatch,
  Config,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::NegativeEffectivePotential: return "negative-effective-potential";
    case ErrorCode::SingularOrientation: return "singular-orientation";
    case ErrorCode::HyperbolicBranch: return "hyperbolic-branch";
    case ErrorCode::InconsistentPotential: return "inconsistent-potential";
    case ErrorCode::EccentricitySingularity: return "generalized-eccentricity-singularity";
    case ErrorCode::Proximity: return "proximity";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::UnknownBody: return "unknown-body";
    case ErrorCode::StepFailure: return "step-failure";
    case ErrorCode::DegenerateCovariance: return "degenerate-covariance";
    case ErrorCode::InvalidMoments: return "invalid-moments";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Input/configuration problems, as opposed to failures of the numerics.
constexpr bool is_input_error(ErrorCode code) {
  return code == ErrorCode::InvalidArgument || code == ErrorCode::Config ||
         code == ErrorCode::Io || code == ErrorCode::GridMismatch ||
         code == ErrorCode::UnknownBody;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        double epoch = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        epoch_(epoch),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Canonical epoch at which the failure occurred, NaN when not applicable.
  double epoch() const noexcept { return epoch_; }
  bool has_epoch() const noexcept { return !std::isnan(epoch_); }
  /// Message without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  double epoch_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              double epoch = std::numeric_limits<double>::quiet_NaN()) {
  throw Error(code, what, epoch);
}

}  // namespace mgeqoe
