#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmcnoid {

enum class ErrorKind {
  SingularSample,
  DegreeTooLarge,
  TruncationExhausted,
  NonAnalyticEigenvalues,
  NegativeRadicand,
  PoleHit,
  StepSizeUnderflow,
  SingularGauge,
  KernelDimensionHigh,
  NotPositive,
  NotPositiveDefinite,
  NoConvergence,
  TailTooLarge,
  NonUnitaryFrame,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind and, where it is
// meaningful, the index of the offending circle sample (-1 otherwise).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int sample = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        sample_(sample) {}

  ErrorKind kind() const noexcept { return kind_; }
  int sample() const noexcept { return sample_; }

 private:
  ErrorKind kind_;
  int sample_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularSample: return "SingularSample";
    case ErrorKind::DegreeTooLarge: return "DegreeTooLarge";
    case ErrorKind::TruncationExhausted: return "TruncationExhausted";
    case ErrorKind::NonAnalyticEigenvalues: return "NonAnalyticEigenvalues";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::PoleHit: return "PoleHit";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::SingularGauge: return "SingularGauge";
    case ErrorKind::KernelDimensionHigh: return "KernelDimensionHigh";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::TailTooLarge: return "TailTooLarge";
    case ErrorKind::NonUnitaryFrame: return "NonUnitaryFrame";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace cmcnoid
