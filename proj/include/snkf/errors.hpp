#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace snkf {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a stationary quantity is requested for |a| >= 1.
struct InstabilityError : Error {
  using Error::Error;
};

/// Scenario construction failed; carries the complete list of violations.
struct ValidationError : Error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v);
};

/// The covariance target cannot be met with finite power.
/// margin = sum(rho_i^2/tau_i) - x/y; negative or zero when infeasible.
struct InfeasibleError : Error {
  double margin = 0.0;
  InfeasibleError(const std::string& what, double margin_);
};

/// A parameter lies outside its documented domain.
struct DomainError : Error {
  using Error::Error;
};

/// SNR undefined: zero effective noise together with zero signal.
struct DegenerateSnrError : Error {
  using Error::Error;
};

}  // namespace snkf
