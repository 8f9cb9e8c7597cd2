#include "snkf/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace snkf::alloc {

namespace {

constexpr double kLambdaRelTol = 1e-15;

double mac_snr_of(const AllocationProblem& p, std::span<const double> alphas) {
  double s = 0.0, r = p.sigma_n2;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += alphas[i] * p.rho[i];
    r += alphas[i] * alphas[i] * p.tau[i];
  }
  return s * s / r;
}

double orth_snr_of(const AllocationProblem& p, std::span<const double> alphas) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a2 = alphas[i] * alphas[i];
    s += a2 * p.rho[i] * p.rho[i] / (a2 * p.tau[i] + p.sigma_n2);
  }
  return s;
}

AllocationSolution finish(const AllocationProblem& p, std::vector<double> alphas) {
  AllocationSolution sol;
  sol.alphas = std::move(alphas);
  sol.alphas_sq.resize(p.size());
  sol.powers.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    sol.alphas_sq[i] = sol.alphas[i] * sol.alphas[i];
    sol.powers[i] = sol.alphas_sq[i] * p.kappa[i];
  }
  sol.total_power = std::accumulate(sol.powers.begin(), sol.powers.end(), 0.0);
  sol.constraint_value =
      p.is_budget() ? sol.total_power : generalized_snr(p, sol.alphas);
  return sol;
}

/// Sensors with nonzero rho sorted by rho^2/kappa descending (stable by
/// original index), the quality ordering for the water-filling solutions.
std::vector<std::size_t> quality_order(const AllocationProblem& p) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.rho[i] != 0.0) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return p.rho[a] * p.rho[a] / p.kappa[a] > p.rho[b] * p.rho[b] / p.kappa[b];
  });
  return idx;
}

}  // namespace

Scheme AllocationProblem::scheme() const {
  return (objective == Objective::min_sum_power_mac || objective == Objective::min_covariance_mac)
             ? Scheme::multi_access
             : Scheme::orthogonal;
}

bool AllocationProblem::is_budget() const {
  return objective == Objective::min_covariance_mac || objective == Objective::min_covariance_orth;
}

void AllocationProblem::validate() const {
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (size() == 0) throw DomainError("allocation problem: M must be >= 1");
  if (rho.size() != size() || tau.size() != size())
    throw DomainError("allocation problem: kappa, rho, tau must have equal length");
  if (!pos(x) || !pos(y)) throw DomainError("allocation problem: x and y must be positive");
  if (!pos(sigma_n2)) throw DomainError("allocation problem: sigma_n2 must be positive");
  for (std::size_t i = 0; i < size(); ++i) {
    if (!pos(kappa[i])) throw DomainError("allocation problem: kappa must be positive");
    if (!pos(tau[i])) throw DomainError("allocation problem: tau must be positive");
    if (!std::isfinite(rho[i])) throw DomainError("allocation problem: rho must be finite");
  }
  if (is_budget() && !pos(gamma_total))
    throw DomainError("allocation problem: gamma_total must be positive");
}

Feasibility feasibility(const AllocationProblem& p) {
  p.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p.rho[i] * p.rho[i] / p.tau[i];
  Feasibility f;
  f.margin = sum - p.x / p.y;
  f.feasible = f.margin > 0.0;  // strict
  return f;
}

double generalized_snr(const AllocationProblem& p, std::span<const double> alphas) {
  if (alphas.size() != p.size()) throw DomainError("alpha length mismatch");
  return p.scheme() == Scheme::multi_access ? mac_snr_of(p, alphas) : orth_snr_of(p, alphas);
}

AllocationSolution solve_p1(const AllocationProblem& p) {
  p.validate();
  const Feasibility f = feasibility(p);
  if (!f.feasible) {
    std::ostringstream os;
    os << "covariance target infeasible: margin (sum rho^2/tau - x/y) = " << f.margin;
    throw InfeasibleError(os.str(), f.margin);
  }

  // Unique root of sum lambda rho_i^2/(kappa_i + lambda tau_i x) = 1/y;
  // the left side is strictly increasing in lambda.
  auto g = [&](double lam) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      s += lam * p.rho[i] * p.rho[i] / (p.kappa[i] + lam * p.tau[i] * p.x);
    return s - 1.0 / p.y;
  };
  double lo = 1e-12, hi = 1.0;
  while (g(hi) < 0.0) {
    hi *= 10.0;
    if (hi > 1e300) throw DomainError("lambda bracket expansion failed");
  }
  if (g(lo) > 0.0) lo = 0.0;
  for (int it = 0; it < 400 && (hi - lo) > kLambdaRelTol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  const double lambda = 0.5 * (lo + hi);

  // mu from constraint activeness; reproduces the closed-form expression
  // sigma_n2 x (sum rho^2 kappa / (4 lambda (kappa + lambda tau x)^2))^-1.
  std::vector<double> b(p.size());
  double sb = 0.0, tb = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    b[i] = p.rho[i] / (2.0 * (p.kappa[i] + lambda * p.tau[i] * p.x));
    sb += p.rho[i] * b[i];
    tb += b[i] * b[i] * p.tau[i];
  }
  const double denom = sb * sb * p.y - tb * p.x;
  if (denom <= 0.0) throw DomainError("internal: active-constraint denominator not positive");
  const double mu = std::sqrt(p.sigma_n2 * p.x / denom);

  std::vector<double> alphas(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) alphas[i] = mu * b[i];
  AllocationSolution sol = finish(p, std::move(alphas));
  sol.lambda = lambda;
  sol.mu = mu;
  return sol;
}

AllocationSolution solve_p2(const AllocationProblem& p) {
  p.validate();
  if (std::all_of(p.rho.begin(), p.rho.end(), [](double r) { return r == 0.0; }))
    throw DomainError("every rho_i is zero: the SNR is identically zero");

  // alpha_i^2 proportional to rho_i^2/(kappa_i + gamma tau_i/sigma_n2)^2,
  // normalised so the budget is exactly spent.
  const double theta = p.gamma_total / p.sigma_n2;
  std::vector<double> u(p.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double den = p.kappa[i] + theta * p.tau[i];
    u[i] = p.rho[i] * p.rho[i] / (den * den);
    z += u[i] * p.kappa[i];
  }
  std::vector<double> alphas(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    alphas[i] = std::copysign(std::sqrt(p.gamma_total * u[i] / z), p.rho[i]);
  AllocationSolution sol = finish(p, std::move(alphas));
  sol.lambda = theta;
  return sol;
}

AllocationSolution solve_p3(const AllocationProblem& p) {
  p.validate();
  const Feasibility f = feasibility(p);
  if (!f.feasible) {
    std::ostringstream os;
    os << "covariance target infeasible: margin (sum rho^2/tau - x/y) = " << f.margin;
    throw InfeasibleError(os.str(), f.margin);
  }

  const auto idx = quality_order(p);
  const double target = p.x / p.y;
  auto sqrt_lambda_for = [&](std::size_t m1) {
    double num = 0.0, den = -target;
    for (std::size_t j = 0; j < m1; ++j) {
      const std::size_t i = idx[j];
      num += std::abs(p.rho[i]) / p.tau[i] * std::sqrt(p.kappa[i] * p.sigma_n2);
      den += p.rho[i] * p.rho[i] / p.tau[i];
    }
    return std::pair{num, den};  // sqrt(lambda) = num/den when den > 0
  };
  auto water_level = [&](double sqrt_lambda, std::size_t i) {
    return sqrt_lambda * std::sqrt(p.rho[i] * p.rho[i] * p.sigma_n2 / p.kappa[i]) - p.sigma_n2;
  };

  for (std::size_t m1 = 1; m1 <= idx.size(); ++m1) {
    const auto [num, den] = sqrt_lambda_for(m1);
    if (den <= 0.0) continue;
    const double sl = num / den;
    if (water_level(sl, idx[m1 - 1]) <= 0.0) continue;
    if (m1 < idx.size()) {
      const auto [num2, den2] = sqrt_lambda_for(m1 + 1);
      if (water_level(num2 / den2, idx[m1]) > 0.0) continue;
    }
    std::vector<double> alphas(p.size(), 0.0);
    for (std::size_t j = 0; j < m1; ++j) {
      const std::size_t i = idx[j];
      alphas[i] = std::sqrt(water_level(sl, i) / p.tau[i]);
    }
    AllocationSolution sol = finish(p, std::move(alphas));
    sol.lambda = sl * sl;
    sol.active_count = m1;
    return sol;
  }
  throw DomainError("internal: no active-set size satisfies the optimality conditions");
}

AllocationSolution solve_p4(const AllocationProblem& p) {
  p.validate();
  if (std::all_of(p.rho.begin(), p.rho.end(), [](double r) { return r == 0.0; }))
    throw DomainError("every rho_i is zero: the SNR is identically zero");

  const auto idx = quality_order(p);
  auto inv_sqrt_lambda_for = [&](std::size_t m1) {
    double num = p.gamma_total, den = 0.0;
    for (std::size_t j = 0; j < m1; ++j) {
      const std::size_t i = idx[j];
      num += p.kappa[i] / p.tau[i] * p.sigma_n2;
      den += std::abs(p.rho[i]) / p.tau[i] * std::sqrt(p.kappa[i] * p.sigma_n2);
    }
    return num / den;
  };
  auto water_level = [&](double inv_sl, std::size_t i) {
    return inv_sl * std::sqrt(p.rho[i] * p.rho[i] * p.sigma_n2 / p.kappa[i]) - p.sigma_n2;
  };

  for (std::size_t m1 = 1; m1 <= idx.size(); ++m1) {
    const double isl = inv_sqrt_lambda_for(m1);
    if (water_level(isl, idx[m1 - 1]) <= 0.0) continue;
    if (m1 < idx.size() && water_level(inv_sqrt_lambda_for(m1 + 1), idx[m1]) > 0.0) continue;
    std::vector<double> alphas(p.size(), 0.0);
    for (std::size_t j = 0; j < m1; ++j) {
      const std::size_t i = idx[j];
      alphas[i] = std::sqrt(water_level(isl, i) / p.tau[i]);
    }
    AllocationSolution sol = finish(p, std::move(alphas));
    sol.lambda = 1.0 / (isl * isl);
    sol.active_count = m1;
    return sol;
  }
  throw DomainError("internal: no active-set size satisfies the optimality conditions");
}

AllocationSolution solve(const AllocationProblem& p) {
  switch (p.objective) {
    case Objective::min_sum_power_mac: return solve_p1(p);
    case Objective::min_covariance_mac: return solve_p2(p);
    case Objective::min_sum_power_orth: return solve_p3(p);
    case Objective::min_covariance_orth: return solve_p4(p);
  }
  throw DomainError("unknown objective");
}

Evaluation evaluate_allocation(const AllocationProblem& p, std::span<const double> alphas) {
  p.validate();
  if (alphas.size() != p.size()) throw DomainError("alpha length mismatch");
  Evaluation e;
  e.powers.resize(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    e.powers[i] = alphas[i] * alphas[i] * p.kappa[i];
    total += e.powers[i];
  }
  const double snr = generalized_snr(p, alphas);
  if (p.is_budget()) {
    e.objective = snr;
    e.constraint_value = total;
  } else {
    e.objective = total;
    e.constraint_value = snr;
  }
  return e;
}

AllocationProblem static_parameters(const SystemModel& model, const SensorSet& sensors,
                                    const ChannelRealization& channels, const NoiseModel& noise) {
  model.require_stable();
  if (channels.size() != sensors.size())
    throw DomainError("dimension mismatch between channels and sensors");
  if (noise.sigma_n2 <= 0.0) throw DomainError("sigma_n2 must be positive");

  AllocationProblem p;
  p.sigma_n2 = noise.sigma_n2;
  const double ex2 = stationary_state_variance(model);
  const auto& h = channels.magnitudes();
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (h[i] <= 0.0)
      throw DomainError("zero channel gain: sensor " + std::to_string(i) +
                        " cannot enter the generalised problem");
    p.kappa.push_back(sensors[i].c * sensors[i].c * ex2 + sensors[i].sigma_v2);
    p.rho.push_back(h[i] * sensors[i].c);
    p.tau.push_back(h[i] * h[i] * sensors[i].sigma_v2);
  }
  return p;
}

AllocationProblem build_static_problem(const SystemModel& model, const SensorSet& sensors,
                                       const ChannelRealization& channels, const NoiseModel& noise,
                                       const Constraint& constraint, Scheme scheme) {
  AllocationProblem p = static_parameters(model, sensors, channels, noise);

  if (constraint.kind == Constraint::Kind::covariance_target) {
    const double d = constraint.value;
    const double upper = stationary_state_variance(model);
    if (!(model.sigma_w2 < d && d < upper)) {
      std::ostringstream os;
      os << "covariance target D = " << d << " outside the valid interval (" << model.sigma_w2
         << ", " << upper << ")";
      throw DomainError(os.str());
    }
    p.x = model.a * model.a * d + model.sigma_w2 - d;
    p.y = d * (d - model.sigma_w2);
    p.objective = scheme == Scheme::multi_access ? Objective::min_sum_power_mac
                                                 : Objective::min_sum_power_orth;
  } else {
    if (constraint.value <= 0.0) throw DomainError("power budget must be positive");
    p.gamma_total = constraint.value;
    p.objective = scheme == Scheme::multi_access ? Objective::min_covariance_mac
                                                 : Objective::min_covariance_orth;
  }
  p.validate();
  return p;
}

}  // namespace snkf::alloc
