#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "snkf/alloc.hpp"
#include "snkf/core.hpp"

namespace snkf::fading {

/// Rician fading through Gaussian components: the real and imaginary parts
/// of each gain are i.i.d. over time, distributed as
/// d_i^-ple * N(mu_i, component_variance).
struct FadingModel {
  std::vector<double> distances;
  std::vector<double> means;
  double component_variance = 1.0;
  double path_loss_exponent = 2.0;

  std::size_t size() const { return distances.size(); }
  void validate() const;
};

/// Seeded per-sensor streams; the sequence for a sensor does not depend on
/// how many other sensors exist or on scheduling.
std::vector<ChannelRealization> sample_channels(const FadingModel& fading, int steps,
                                                std::uint64_t seed);

struct GreedyStep {
  alloc::AllocationSolution solution;
  double p_next = 0.0;
  bool transmitted = false;  // false when the target was met with zero power
};

/// Per-step minimum-power allocation holding P_{k+1} <= D. Builds the
/// generalised problem with x = a^2 P_k + sigma_w2 - D, y = P_k (D - sigma_w2)
/// and delegates to the static solver. When the open-loop update already
/// meets D (x <= 0) no power is spent. Throws InfeasibleError (carrying the
/// SNR margin) when the current channel cannot reach D.
GreedyStep greedy_min_power_step(double p_k, const SystemModel& model, const SensorSet& sensors,
                                 const ChannelRealization& channel, const NoiseModel& noise,
                                 double d, Scheme scheme);

/// Per-step minimum-covariance allocation under a power budget.
GreedyStep greedy_min_cov_step(double p_k, const SystemModel& model, const SensorSet& sensors,
                               const ChannelRealization& channel, const NoiseModel& noise,
                               double gamma_total, Scheme scheme);

/// What to do when a D-constrained step is infeasible under the current
/// fade: spend gamma_cap through the budget solver and flag the step, or
/// abort the run.
enum class InfeasiblePolicy { best_effort, strict };

struct GreedyConfig {
  int steps = 100;
  alloc::Constraint constraint;
  Scheme scheme = Scheme::multi_access;
  std::uint64_t seed = 0;
  std::optional<double> p0;  // default: stationary state variance
  double x0 = 0.0;
  InfeasiblePolicy policy = InfeasiblePolicy::best_effort;
  double gamma_cap = 1.0;  // best-effort spend on infeasible steps
};

struct GreedyTrace {
  Scheme scheme = Scheme::multi_access;
  std::vector<double> x_hat;
  std::vector<double> p;
  std::vector<std::vector<double>> powers;
  std::vector<double> total_power;
  std::vector<char> feasible;
  std::vector<double> x_true;
  int infeasible_steps = 0;

  /// CSV with header k,x_hat,P,gamma_1..gamma_M,feasible,total_power.
  void write_csv(std::ostream& os) const;
};

/// Full greedy Monte Carlo trajectory: channels sampled from the fading
/// model, allocations re-solved each step with current CSI, state estimated
/// by the matching Kalman filter.
GreedyTrace simulate_greedy(const SystemModel& model, const SensorSet& sensors,
                            const NoiseModel& noise, const FadingModel& fading,
                            const GreedyConfig& config);

}  // namespace snkf::fading
