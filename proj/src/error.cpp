#include "vprk/error.hpp"

namespace vprk {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::UnknownTableau: return "UnknownTableau";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::UnknownMethod: return "UnknownMethod";
    case ErrorKind::UnknownExperiment: return "UnknownExperiment";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::SingularP: return "SingularP";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::SingularNewtonMatrix: return "SingularNewtonMatrix";
    case ErrorKind::SingularKahanMatrix: return "SingularKahanMatrix";
    case ErrorKind::SingularStageMatrix: return "SingularStageMatrix";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::DeltaConditionViolated: return "DeltaConditionViolated";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::NonpositiveDensity: return "NonpositiveDensity";
    case ErrorKind::StepSizeMismatch: return "StepSizeMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace vprk
