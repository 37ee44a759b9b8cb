#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nmzi {

enum class ErrorCode {
  PerturbationTooLarge,
  InvalidStep,
  NoSolution,
  DegenerateAmplitude,
  DependentConditions,
  AmplitudeTooLarge,
  UnresolvableFrequencies,
  FrequencyOutOfRange,
  ZeroReferencePeak,
  OutOfFringeRange,
  DegenerateInnerMzi,
  DegenerateOuterMzi,
};

std::string_view to_string(ErrorCode code);

/// Raised by every numerical operation whose precondition fails on physical
/// grounds (as opposed to programming errors, which use std::invalid_argument).
class DomainError : public std::runtime_error {
 public:
  DomainError(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nmzi
