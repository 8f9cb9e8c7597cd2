#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snkf/alloc.hpp"
#include "snkf/core.hpp"
#include "snkf/fading.hpp"

namespace snkf::nocsi {

/// Per-sensor statistics of the complex gain: component means and variances,
/// plus second moments (for independent Gaussian components these follow as
/// e2 = var + mean^2, which from_gaussian fills in).
struct ComponentStats {
  double mean_re = 0.0;
  double mean_im = 0.0;
  double var_re = 0.0;
  double var_im = 0.0;
  double e2_re = 0.0;
  double e2_im = 0.0;

  static ComponentStats from_gaussian(double mean_re, double mean_im, double var_re,
                                      double var_im);
  double mean_abs() const;  // |E[h]|
  void validate() const;
};

struct ChannelStatistics {
  std::vector<ComponentStats> per_sensor;
  std::size_t size() const { return per_sensor.size(); }
};

/// Statistics implied by a Rician fading model (Gaussian components).
ChannelStatistics statistics_from_fading(const fading::FadingModel& fading);

/// Mean-direction beamforming: alpha_tilde_i = alpha_i conj(E[h_i])/|E[h_i]|.
/// Throws DomainError for zero-mean (circularly symmetric) channels, which
/// carry no usable phase reference.
std::vector<std::complex<double>> mean_beamform_alphas(std::span<const double> alphas,
                                                       const ChannelStatistics& stats);

/// Moments of alpha_tilde * h for one sensor, exact for independent
/// real/imaginary components of any distribution with the given statistics.
struct AmplifiedMoments {
  double e_re = 0.0;
  double e_im = 0.0;
  double var_re = 0.0;
  double var_im = 0.0;
  double e2_re = 0.0;
  double e2_im = 0.0;
};
AmplifiedMoments amplified_moments(const ComponentStats& stats, std::complex<double> alpha_tilde);

/// Beamformed convenience form; moments are degree-2 homogeneous in alpha.
std::vector<AmplifiedMoments> derive_moments(const ChannelStatistics& stats,
                                             std::span<const double> alphas);

/// One (Re, Im) observation block: effective gain vector and 2x2 noise
/// covariance. The multi-access model aggregates all sensors into a single
/// block; the orthogonal model keeps one block per sensor.
struct EffectiveBlock {
  double c_re = 0.0;
  double c_im = 0.0;
  double r11 = 0.0;
  double r12 = 0.0;
  double r22 = 0.0;
};

struct EffectiveModel {
  Scheme scheme = Scheme::multi_access;
  std::vector<EffectiveBlock> blocks;  // size 1 (multi-access) or M (orthogonal)
  double s_stat = 0.0;                 // C^T R^-1 C accumulated over blocks
};

/// Builds the effective observation model from channel statistics and a
/// (general complex) amplification. Works for any alpha_tilde; under
/// mean beamforming the imaginary gain entries vanish.
EffectiveModel build_effective_model(const SystemModel& model, const SensorSet& sensors,
                                     const ChannelStatistics& stats,
                                     std::span<const std::complex<double>> alpha_tilde,
                                     const NoiseModel& noise, Scheme scheme);

/// Beamformed overload.
EffectiveModel build_effective_model(const SystemModel& model, const SensorSet& sensors,
                                     const ChannelStatistics& stats,
                                     std::span<const double> alphas, const NoiseModel& noise,
                                     Scheme scheme);

struct MmseState {
  double x_hat = 0.0;
  double p = 0.0;
};

/// One linear-MMSE step: correct the prior with the stacked (Re, Im)
/// measurement, then predict. z has 2 entries for multi-access, 2M for
/// orthogonal (sensor-major). Returns the next prior; the reported p is
/// the one-step-ahead covariance, comparable with the CSI recursions.
MmseState mmse_filter_step(const MmseState& prior, std::span<const double> z,
                           const EffectiveModel& eff, const SystemModel& model);

/// Steady state of the statistics-only estimator; same closed form as the
/// CSI case evaluated at S = C^T R^-1 C.
double steady_state_nocsi(const EffectiveModel& eff, const SystemModel& model);

/// Generalised problem matching the statistics-only SNR:
///   rho_i = |E[h_i]| c_i,
///   tau_i = Var[Re[ah]]/a^2 * c_i^2 sigma_w2/(1-a^2) + E[Re^2[ah]]/a^2 * sigma_i^2,
///   kappa_i as in the static mapping. Alpha-free by degree-2 homogeneity
/// (asserted numerically).
alloc::AllocationProblem build_nocsi_problem(const SystemModel& model, const SensorSet& sensors,
                                             const ChannelStatistics& stats,
                                             const NoiseModel& noise,
                                             const alloc::Constraint& constraint, Scheme scheme);

/// Statistics-only power allocation; runs once since the effective model is
/// time-invariant.
alloc::AllocationSolution allocate_nocsi(const SystemModel& model, const SensorSet& sensors,
                                         const ChannelStatistics& stats, const NoiseModel& noise,
                                         const alloc::Constraint& constraint, Scheme scheme);

struct NocsiTrace {
  std::vector<double> x_hat;  // prior estimates
  std::vector<double> p;      // prior covariances
  std::vector<double> x_true;
};

/// Monte Carlo run of the statistics-only estimator. Channels are drawn
/// with independent Gaussian components matching the given statistics;
/// amplifications are mean-beamformed and fixed for the whole run.
NocsiTrace simulate_nocsi(const SystemModel& model, const SensorSet& sensors,
                          const NoiseModel& noise, const ChannelStatistics& stats,
                          std::span<const double> alphas, int steps, std::uint64_t seed,
                          std::optional<double> p0 = std::nullopt,
                          Scheme scheme = Scheme::multi_access);

}  // namespace snkf::nocsi
