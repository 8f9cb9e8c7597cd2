#pragma once

#include <utility>
#include <vector>

#include "snkf/core.hpp"

namespace snkf::asympt {

/// Common sensor parameters for the symmetric large-M expressions.
struct SymmetricParams {
  double c = 1.0;
  double sigma_v2 = 1.0;
  double h = 1.0;
  SystemModel model;
  double sigma_n2 = 1.0;

  void validate() const;  // c != 0, h > 0, sigma_v2 > 0, sigma_n2 >= 0
};

enum class Scaling { none, inv_sqrt_m };

/// Exact SNR of a symmetric M-sensor configuration under either access
/// scheme and amplification rule (alpha = 1 or alpha = 1/sqrt(M)).
/// M is real-valued so that rate tests can probe arbitrary magnitudes.
double symmetric_snr(double m, const SymmetricParams& p, Scheme scheme, Scaling scaling);

/// Exact steady-state covariance for the symmetric configuration.
double exact_symmetric_p_inf(double m, const SymmetricParams& p, Scheme scheme, Scaling scaling);

/// Leading-order expansions. Each returns sigma_w2 + coefficient/M with the
/// remainder of order 1/M^2 certified by tests, not computed.
double mac_noscale(double m, const SymmetricParams& p);
double orth_noscale(double m, const SymmetricParams& p);
double mac_scaled(double m, const SymmetricParams& p);  // same expression as orth_noscale

/// Under 1/sqrt(M) scaling the orthogonal scheme saturates: the covariance
/// approaches a limit strictly above sigma_w2 (when sigma_n2 > 0), with a
/// 1/M first-order correction.
struct ScaledOrthExpansion {
  double limit = 0.0;
  double coeff = 0.0;  // first-order 1/M coefficient

  double at(double m) const { return limit + coeff / m; }
};
ScaledOrthExpansion orth_scaled_limit(const SymmetricParams& p);

/// Componentwise parameter bounds for the asymmetric sandwich.
struct ParamBounds {
  double c_min = 0.0, c_max = 0.0;
  double sigma_min2 = 0.0, sigma_max2 = 0.0;
  double h_min = 0.0, h_max = 0.0;

  void validate() const;
};

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

/// Asymptotic sandwich for general bounded parameters (sign convention
/// alpha_i c_i > 0 assumed). With 1/sqrt(M) scaling:
///   sigma_w2 + a^2 (h_min^2 s_min^2 + sigma_n2)/(h_max^2 c_max^2 M)
///     <= P_inf <= sigma_w2 + a^2 (h_max^2 s_max^2 + sigma_n2)/(h_min^2 c_min^2 M);
/// without scaling sigma_n2 drops from both numerators.
BoundPair general_bounds(double m, const ParamBounds& bounds, const SystemModel& model,
                         double sigma_n2, Scaling scaling);

enum class PowerBudget { per_sensor, total };

/// Amplifications that spend exactly gamma per sensor (per_sensor mode) or
/// gamma/M per sensor (total mode): alpha_i = sqrt(gamma (1-a^2) /
/// (c_i^2 sigma_w2 + sigma_i^2 (1-a^2))).
Amplification equal_power_alphas(const SensorSet& sensors, const SystemModel& model,
                                 double budget, PowerBudget kind);

/// Steady state of the idealised configuration where measurements reach the
/// fusion center unscaled and noiselessly: S = sum c_i^2/sigma_i^2. Lower
/// bound on every scheme's covariance for the same sensors.
double ideal_rate_bound(const SensorSet& sensors, const SystemModel& model);

/// Reproducible non-convergence witness: sensors arrive in alternating
/// blocks of two parameter sets with block sizes 10^1..10^levels. Under
/// 1/sqrt(M) scaling in the orthogonal scheme the covariance evaluated at
/// the block boundaries oscillates between two distinct values instead of
/// converging. Returns (cumulative M, exact P_inf^o) at each boundary.
std::vector<std::pair<double, double>> alternating_blocks_orth_scaled(
    const SymmetricParams& first, const SymmetricParams& second, int levels = 5);

}  // namespace snkf::asympt
