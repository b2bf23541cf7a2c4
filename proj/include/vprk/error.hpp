#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vprk {

enum class ErrorKind {
  DimensionMismatch,
  NonFinite,
  SingularMatrix,
  UnknownTableau,
  UnknownField,
  UnknownMethod,
  UnknownExperiment,
  BadParams,
  SingularP,
  NewtonDivergence,
  SingularNewtonMatrix,
  SingularKahanMatrix,
  SingularStageMatrix,
  SingularDenominator,
  DeltaConditionViolated,
  EigenFailure,
  NonpositiveDensity,
  StepSizeMismatch,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure in the library is reported through this exception; `kind()`
/// identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace vprk
