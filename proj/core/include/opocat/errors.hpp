#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opocat {

enum class ErrorCode {
  InvalidParams,
  InvalidArgument,
  InvalidState,
  RequiresBelowThreshold,
  AboveThreshold,
  SingularCovariance,
  NonSymplectic,
  UnstableAtInfinity,
  DimensionCap,
  TraceDrift,
  TruncationLeak,
  UnsupportedState,
  ZeroHeraldProbability,
  DegenerateCounts,
  RegimeViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors that describe the physics domain (threshold, truncation,
/// herald failure) rather than malformed input.
bool is_domain_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace opocat
