#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "snkf/core.hpp"

namespace snkf::alloc {

/// Which of the four static problems an AllocationProblem instance poses.
enum class Objective {
  min_sum_power_mac,   // minimise total power, covariance target (multi-access)
  min_covariance_mac,  // minimise covariance, power budget (multi-access)
  min_sum_power_orth,  // minimise total power, covariance target (orthogonal)
  min_covariance_orth  // minimise covariance, power budget (orthogonal)
};

/// Generalised allocation instance over variables alpha_1..alpha_M.
/// Covariance-target problems constrain the scheme SNR to x/y; budget
/// problems constrain sum alpha_i^2 kappa_i to gamma_total.
struct AllocationProblem {
  double x = 1.0;
  double y = 1.0;
  std::vector<double> kappa;  // power weights, > 0
  std::vector<double> rho;    // signal gains, any sign
  std::vector<double> tau;    // noise weights, > 0
  double sigma_n2 = 1.0;
  Objective objective = Objective::min_sum_power_mac;
  double gamma_total = 0.0;  // budget objectives only

  std::size_t size() const { return kappa.size(); }
  Scheme scheme() const;
  bool is_budget() const;
  void validate() const;  // throws DomainError on any violated invariant
};

struct Feasibility {
  bool feasible = false;
  double margin = 0.0;  // sum rho_i^2/tau_i - x/y
};

/// Strict feasibility of the covariance-target problems: a finite-power
/// solution exists iff sum rho_i^2/tau_i > x/y. The same condition governs
/// both access schemes.
Feasibility feasibility(const AllocationProblem& problem);

struct AllocationSolution {
  std::vector<double> alphas;      // signed (multi-access) or nonnegative (orthogonal)
  std::vector<double> alphas_sq;
  std::vector<double> powers;      // alpha_i^2 kappa_i
  double total_power = 0.0;
  double lambda = 0.0;             // multiplier (effective water level for budget problems)
  std::optional<double> mu;        // multi-access covariance-target problems only
  std::optional<std::size_t> active_count;  // orthogonal problems: M1
  double constraint_value = 0.0;   // achieved SNR (target problems) or total power (budget)
};

/// Minimum sum power under a covariance target, multi-access. All sensors
/// with rho_i != 0 receive strictly positive power; the returned solution
/// and its global negation are both optimal.
AllocationSolution solve_p1(const AllocationProblem& problem);

/// Minimum covariance under a power budget, multi-access. Budget is tight.
AllocationSolution solve_p2(const AllocationProblem& problem);

/// Minimum sum power under a covariance target, orthogonal. Water-filling:
/// the active set is a prefix of the rho^2/kappa ordering.
AllocationSolution solve_p3(const AllocationProblem& problem);

/// Minimum covariance under a power budget, orthogonal.
AllocationSolution solve_p4(const AllocationProblem& problem);

/// Dispatch on problem.objective.
AllocationSolution solve(const AllocationProblem& problem);

struct Evaluation {
  double objective = 0.0;         // total power (power objectives) or scheme SNR (covariance)
  double constraint_value = 0.0;  // scheme SNR (target problems) or total power (budget)
  std::vector<double> powers;
};

/// Pure evaluation of an allocation against a problem; no optimisation.
Evaluation evaluate_allocation(const AllocationProblem& problem, std::span<const double> alphas);

/// Scheme SNR of an allocation under the generalised parameterisation.
double generalized_snr(const AllocationProblem& problem, std::span<const double> alphas);

struct Constraint {
  enum class Kind { covariance_target, power_budget };
  Kind kind = Kind::covariance_target;
  double value = 0.0;

  static Constraint covariance(double d) { return {Kind::covariance_target, d}; }
  static Constraint budget(double gamma) { return {Kind::power_budget, gamma}; }
};

/// The sensor-level part of the static mapping:
///   kappa_i = c_i^2 sigma_w2/(1-a^2) + sigma_i^2, rho_i = h_i c_i,
///   tau_i = h_i^2 sigma_i^2. Objective and x/y are left at defaults.
AllocationProblem static_parameters(const SystemModel& model, const SensorSet& sensors,
                                    const ChannelRealization& channels, const NoiseModel& noise);

/// Full static mapping. For a covariance target D, x = a^2 D + sigma_w2 - D
/// and y = D (D - sigma_w2), valid only for sigma_w2 < D < sigma_w2/(1-a^2);
/// for a power budget, gamma_total is set instead.
AllocationProblem build_static_problem(const SystemModel& model, const SensorSet& sensors,
                                       const ChannelRealization& channels, const NoiseModel& noise,
                                       const Constraint& constraint, Scheme scheme);

}  // namespace snkf::alloc
