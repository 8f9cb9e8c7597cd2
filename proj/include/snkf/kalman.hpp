#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "snkf/core.hpp"

namespace snkf::kalman {

/// The scalar statistic through which the covariance recursion sees the
/// amplifications and channels. In the multi-access scheme S = c_bar^2/r_bar
/// with c_bar = sum alpha_i h_i c_i and r_bar = sum alpha_i^2 h_i^2 sigma_i^2
/// + sigma_n2; in the orthogonal scheme S is the per-sensor sum and c_bar,
/// r_bar are absent.
struct SnrDecomposition {
  Scheme scheme = Scheme::multi_access;
  double snr = 0.0;
  std::optional<double> c_bar;
  std::optional<double> r_bar;
};

SnrDecomposition mac_snr(const Amplification& alphas, const ChannelRealization& channels,
                         const SensorSet& sensors, const NoiseModel& noise);

SnrDecomposition orth_snr(const Amplification& alphas, const ChannelRealization& channels,
                          const SensorSet& sensors, const NoiseModel& noise);

/// One covariance step of the multi-access recursion:
/// P' = a^2 P r_bar / (c_bar^2 P + r_bar) + sigma_w2. Requires P >= 0, r_bar > 0.
double riccati_step_mac(double p, double c_bar, double r_bar, const SystemModel& model);

/// One covariance step of the orthogonal recursion:
/// P' = a^2 P / (1 + P S_o) + sigma_w2. Requires P >= 0, S_o >= 0.
double riccati_step_orth(double p, double s_o, const SystemModel& model);

/// Steady-state error covariance as a function of the SNR. Same functional
/// form for both schemes. S = 0 returns the no-information covariance
/// sigma_w2/(1 - a^2); the closed form is evaluated in a
/// cancellation-free branch so the S -> 0 limit is smooth.
double steady_state_from_snr(double snr, const SystemModel& model);

/// One full filter step in the one-step-predictor form (multi-access):
/// given the prior (x_hat, p) and the received z, returns the next prior.
struct ScalarState {
  double x_hat = 0.0;
  double p = 0.0;
};
ScalarState filter_step_mac(const ScalarState& prior, double z, double c_bar, double r_bar,
                            const SystemModel& model);

/// Orthogonal counterpart; z, c, r are the per-sensor measurements,
/// effective gains alpha_i h_i c_i and noise variances alpha_i^2 h_i^2
/// sigma_i^2 + sigma_n2.
ScalarState filter_step_orth(const ScalarState& prior, std::span<const double> z,
                             std::span<const double> c, std::span<const double> r,
                             const SystemModel& model);

/// Amplifications over time: either one constant vector or one per step.
class AmplificationSchedule {
 public:
  explicit AmplificationSchedule(Amplification constant);
  explicit AmplificationSchedule(std::vector<Amplification> per_step);
  const Amplification& at(int k) const;

 private:
  std::vector<Amplification> steps_;
  bool constant_ = true;
};

struct FilterOptions {
  int steps = 100;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::multi_access;
  std::optional<double> p0;  // default: stationary state variance
  double x0 = 0.0;           // the stationary mean
};

/// Simulated filter run over static channels. Rows hold the prior estimate
/// and covariance at each step together with the powers spent.
struct FilterTrace {
  Scheme scheme = Scheme::multi_access;
  std::vector<double> x_hat;
  std::vector<double> p;
  std::vector<std::vector<double>> powers;
  std::vector<double> x_true;  // simulation ground truth, not serialized

  /// CSV with header k,x_hat,P,gamma_1..gamma_M.
  void write_csv(std::ostream& os) const;
};

FilterTrace run_filter(const Scenario& scenario, const AmplificationSchedule& schedule,
                       const FilterOptions& options);

enum class Dominance { mac, orthogonal, tie };

struct SchemeComparison {
  double snr_mac = 0.0;
  double snr_orth = 0.0;
  double p_inf_mac = 0.0;
  double p_inf_orth = 0.0;
  Dominance tag = Dominance::tie;
  std::vector<std::size_t> flipped_sensors;  // alphas negated to make alpha_i c_i > 0
};

/// Evaluates both access schemes on the same scenario and amplification.
/// Enforces the sign convention alpha_i c_i > 0 by flipping signs where
/// needed (reported). Larger SNR always pairs with smaller steady state.
SchemeComparison compare_schemes(const Scenario& scenario, const Amplification& alphas);

}  // namespace snkf::kalman
