#ifndef PCAMIL_ERROR_HPP
#define PCAMIL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcamil {

enum class ErrorCode {
  // configuration
  InvalidConfig,
  InvalidK,
  TooFewFolds,
  TooFewPerClass,
  LengthMismatch,
  ShapeMismatch,
  // data
  MissingFile,
  MalformedRow,
  UnknownLabel,
  UnknownSide,
  DuplicatePatientId,
  BadMagic,
  VersionMismatch,
  TruncatedPayload,
  NonFiniteEntry,
  InconsistentDataset,
  DegenerateBag,
  EmptyBag,
  SingleClassTrainingSet,
  SingleClassCohort,
  NoPositives,
  IoError,
  // numerical
  DomainError,
  ZeroEvidence,
  OutOfRangePosterior,
  NonFiniteActivation,
  NonFiniteLoss,
};

enum class ErrorCategory { Config, Data, Numerical };

inline constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidK:
    case ErrorCode::TooFewFolds:
    case ErrorCode::TooFewPerClass:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ShapeMismatch:
      return ErrorCategory::Config;
    case ErrorCode::DomainError:
    case ErrorCode::ZeroEvidence:
    case ErrorCode::OutOfRangePosterior:
    case ErrorCode::NonFiniteActivation:
    case ErrorCode::NonFiniteLoss:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::TooFewFolds: return "TooFewFolds";
    case ErrorCode::TooFewPerClass: return "TooFewPerClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownSide: return "UnknownSide";
    case ErrorCode::DuplicatePatientId: return "DuplicatePatientId";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::InconsistentDataset: return "InconsistentDataset";
    case ErrorCode::DegenerateBag: return "DegenerateBag";
    case ErrorCode::EmptyBag: return "EmptyBag";
    case ErrorCode::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::SingleClassCohort: return "SingleClassCohort";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ZeroEvidence: return "ZeroEvidence";
    case ErrorCode::OutOfRangePosterior: return "OutOfRangePosterior";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code identifies the failure
/// precisely; the category decides the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace pcamil

#endif  // PCAMIL_ERROR_HPP
