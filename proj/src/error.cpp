#include "nmzi/error.hpp"

namespace nmzi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PerturbationTooLarge: return "PerturbationTooLarge";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::DegenerateAmplitude: return "DegenerateAmplitude";
    case ErrorCode::DependentConditions: return "DependentConditions";
    case ErrorCode::AmplitudeTooLarge: return "AmplitudeTooLarge";
    case ErrorCode::UnresolvableFrequencies: return "UnresolvableFrequencies";
    case ErrorCode::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case ErrorCode::ZeroReferencePeak: return "ZeroReferencePeak";
    case ErrorCode::OutOfFringeRange: return "OutOfFringeRange";
    case ErrorCode::DegenerateInnerMzi: return "DegenerateInnerMzi";
    case ErrorCode::DegenerateOuterMzi: return "DegenerateOuterMzi";
  }
  return "Unknown";
}

DomainError::DomainError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace nmzi
