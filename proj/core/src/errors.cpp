#include "opocat/errors.hpp"

namespace opocat {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::RequiresBelowThreshold: return "RequiresBelowThreshold";
    case ErrorCode::AboveThreshold: return "AboveThreshold";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NonSymplectic: return "NonSymplectic";
    case ErrorCode::UnstableAtInfinity: return "UnstableAtInfinity";
    case ErrorCode::DimensionCap: return "DimensionCap";
    case ErrorCode::TraceDrift: return "TraceDrift";
    case ErrorCode::TruncationLeak: return "TruncationLeak";
    case ErrorCode::UnsupportedState: return "UnsupportedState";
    case ErrorCode::ZeroHeraldProbability: return "ZeroHeraldProbability";
    case ErrorCode::DegenerateCounts: return "DegenerateCounts";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
  }
  return "Unknown";
}

bool is_domain_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidState:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace opocat
