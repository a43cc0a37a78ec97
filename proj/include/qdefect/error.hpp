#pragma once

#include <stdexcept>
#include <string>

namespace qdefect {

enum class ErrorCode {
  ZeroTensor,
  BiaxialityOvershoot,
  NonUnitVector,
  NonSymmetric,
  NonOrthogonal,
  OutOfRange,
  NotUnitNorm,
  EigenvalueGapTooSmall,
  InvalidGrid,
  NotInterior,
  OutOfDomain,
  AmplitudeTooLarge,
  OrientationFailure,
  DegenerateBoundary,
  DecompositionFailure,
  ScaleTooSmall,
  DegreeMismatch,
  LineSearchStall,
  NonFiniteEnergy,
  CorruptSnapshot,
  Io,
  DegenerateSample,
  UnderSampledLoop,
  RadiiTooSmall,
  SignAlignmentFailure,
  RankDeficientFit,
  ResidualTooLarge,
  JetEstimationFailure,
  InsufficientCandidates,
  InvalidArgument,
  InvalidConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroTensor: return "ZeroTensor";
    case ErrorCode::BiaxialityOvershoot: return "BiaxialityOvershoot";
    case ErrorCode::NonUnitVector: return "NonUnitVector";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonOrthogonal: return "NonOrthogonal";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotUnitNorm: return "NotUnitNorm";
    case ErrorCode::EigenvalueGapTooSmall: return "EigenvalueGapTooSmall";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::AmplitudeTooLarge: return "AmplitudeTooLarge";
    case ErrorCode::OrientationFailure: return "OrientationFailure";
    case ErrorCode::DegenerateBoundary: return "DegenerateBoundary";
    case ErrorCode::DecompositionFailure: return "DecompositionFailure";
    case ErrorCode::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::LineSearchStall: return "LineSearchStall";
    case ErrorCode::NonFiniteEnergy: return "NonFiniteEnergy";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::Io: return "Io";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::UnderSampledLoop: return "UnderSampledLoop";
    case ErrorCode::RadiiTooSmall: return "RadiiTooSmall";
    case ErrorCode::SignAlignmentFailure: return "SignAlignmentFailure";
    case ErrorCode::RankDeficientFit: return "RankDeficientFit";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::JetEstimationFailure: return "JetEstimationFailure";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qdefect
