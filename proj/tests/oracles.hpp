#pragma once

// Test-only oracles: independent computation paths used to freeze expected
// values. None of these share code with the library implementations they
// check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "snkf/alloc.hpp"
#include "snkf/core.hpp"
#include "snkf/rng.hpp"

namespace oracles {

/// Fixed-point iteration of the covariance recursion at constant SNR,
/// started from the no-information covariance.
inline double steady_state_fixed_point(double snr, const snkf::SystemModel& model,
                                       int max_iter = 200000) {
  const double a2 = model.a * model.a;
  double p = model.sigma_w2 / (1.0 - a2);
  for (int i = 0; i < max_iter; ++i) {
    const double next = a2 * p / (1.0 + p * snr) + model.sigma_w2;
    if (next == p) return p;
    if (std::abs(next - p) < 1e-14 * p && i > 32) return next;
    p = next;
  }
  return p;
}

/// Direction-parameterised search for the multi-access problems. Any alpha
/// can be written t*u with u a direction; on the constraint surface the
/// objective becomes a smooth function of u alone, which a multi-start
/// adaptive random search minimises (P1) or maximises (P2). Starts must
/// agree within 1e-6 or the oracle refuses the instance.
struct DirectionSearch {
  int starts = 64;
  int explore_iters = 300;
  std::uint64_t seed = 12345;

  template <typename F>
  double run(std::size_t dim, F&& value, bool minimize, const std::vector<double>& hint = {}) const {
    snkf::rng::Stream stream(seed);
    auto better = [&](double a, double b) { return minimize ? a < b : a > b; };
    std::vector<double> best_per_start;
    for (int s = 0; s < starts; ++s) {
      std::vector<double> u(dim);
      for (auto& v : u) v = stream.normal();
      if (!hint.empty() && s % 2 == 0) {
        // half the starts perturb the hint direction (and its negation)
        const double sign = (s % 4 == 0) ? 1.0 : -1.0;
        for (std::size_t j = 0; j < dim; ++j) u[j] = sign * hint[j] + 0.3 * u[j];
      }
      double cur = value(u);
      // explore
      double step = 0.7;
      for (int it = 0; it < explore_iters; ++it) {
        std::vector<double> cand = u;
        const std::size_t j = static_cast<std::size_t>(stream.next_u64() % dim);
        cand[j] += step * stream.normal();
        const double c = value(cand);
        if (better(c, cur)) {
          u = std::move(cand);
          cur = c;
        } else {
          step *= 0.99;
        }
      }
      // polish: coordinate pattern search with geometric steps
      for (double h = 0.1; h > 1e-10; h *= 0.5) {
        bool improved = true;
        while (improved) {
          improved = false;
          for (std::size_t j = 0; j < dim; ++j) {
            for (const double dir : {h, -h}) {
              std::vector<double> cand = u;
              cand[j] += dir;
              const double c = value(cand);
              if (better(c, cur)) {
                u = std::move(cand);
                cur = c;
                improved = true;
              }
            }
          }
        }
      }
      best_per_start.push_back(cur);
    }
    // starts stuck outside the feasible cone never converged; ignore them
    std::vector<double> finite;
    for (double v : best_per_start)
      if (std::abs(v) < 1e200) finite.push_back(v);
    if (finite.size() < 2) throw std::runtime_error("direction-search oracle: no converged starts");
    std::sort(finite.begin(), finite.end());
    const double best = minimize ? finite.front() : finite.back();
    const double second = minimize ? finite[1] : finite[finite.size() - 2];
    if (std::abs(second - best) > 1e-6 * std::max(1.0, std::abs(best)))
      throw std::runtime_error("direction-search oracle: starts disagree");
    return best;
  }
};

/// Minimum total power meeting the covariance target (multi-access).
inline double p1_direction_oracle(const snkf::alloc::AllocationProblem& p,
                                  std::uint64_t seed = 12345) {
  const double target = p.x / p.y;
  DirectionSearch search;
  search.seed = seed;
  auto value = [&](const std::vector<double>& u) {
    double s = 0.0, t = 0.0, k = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      s += u[i] * p.rho[i];
      t += u[i] * u[i] * p.tau[i];
      k += u[i] * u[i] * p.kappa[i];
    }
    const double den = s * s - target * t;  // scaled constraint headroom
    if (den <= 0.0) return 1e300;
    return k * target * p.sigma_n2 / den;
  };
  return search.run(p.size(), value, /*minimize=*/true);
}

/// Maximum SNR on the power-budget surface (multi-access).
inline double p2_direction_oracle(const snkf::alloc::AllocationProblem& p,
                                  std::uint64_t seed = 12345) {
  DirectionSearch search;
  search.seed = seed;
  auto value = [&](const std::vector<double>& u) {
    double s = 0.0, t = 0.0, k = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      s += u[i] * p.rho[i];
      t += u[i] * u[i] * p.tau[i];
      k += u[i] * u[i] * p.kappa[i];
    }
    if (k <= 0.0) return -1e300;
    return p.gamma_total * s * s / (p.gamma_total * t + k * p.sigma_n2);
  };
  return search.run(p.size(), value, /*minimize=*/false);
}

/// Exhaustive active-set enumeration for the orthogonal problems. Every
/// subset (not only prefixes) gets its own stationarity closed form; the
/// best valid subset wins. Returns the optimal objective.
inline double p3_subset_oracle(const snkf::alloc::AllocationProblem& p) {
  const std::size_t m = p.size();
  const double target = p.x / p.y;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double num = 0.0, den = -target;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask >> i & 1) || p.rho[i] == 0.0) continue;
      num += std::abs(p.rho[i]) / p.tau[i] * std::sqrt(p.kappa[i] * p.sigma_n2);
      den += p.rho[i] * p.rho[i] / p.tau[i];
    }
    if (den <= 0.0 || num == 0.0) continue;
    const double sl = num / den;
    double objective = 0.0, achieved = 0.0;
    bool valid = true;
    for (std::size_t i = 0; i < m && valid; ++i) {
      if (!(mask >> i & 1) || p.rho[i] == 0.0) continue;
      const double a2 =
          (sl * std::sqrt(p.rho[i] * p.rho[i] * p.sigma_n2 / p.kappa[i]) - p.sigma_n2) / p.tau[i];
      if (a2 <= 0.0) {
        valid = false;
        break;
      }
      objective += a2 * p.kappa[i];
      achieved += a2 * p.rho[i] * p.rho[i] / (a2 * p.tau[i] + p.sigma_n2);
    }
    if (!valid || std::abs(achieved - target) > 1e-7 * target) continue;
    best = std::min(best, objective);
  }
  return best;
}

/// As p3_subset_oracle for the budget problem: returns the best achievable
/// SNR over all subset stationary points.
inline double p4_subset_oracle(const snkf::alloc::AllocationProblem& p) {
  const std::size_t m = p.size();
  double best = -1.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double num = p.gamma_total, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask >> i & 1) || p.rho[i] == 0.0) continue;
      num += p.kappa[i] / p.tau[i] * p.sigma_n2;
      den += std::abs(p.rho[i]) / p.tau[i] * std::sqrt(p.kappa[i] * p.sigma_n2);
    }
    if (den == 0.0) continue;
    const double isl = num / den;
    double snr = 0.0;
    bool valid = true;
    for (std::size_t i = 0; i < m && valid; ++i) {
      if (!(mask >> i & 1) || p.rho[i] == 0.0) continue;
      const double a2 =
          (isl * std::sqrt(p.rho[i] * p.rho[i] * p.sigma_n2 / p.kappa[i]) - p.sigma_n2) / p.tau[i];
      if (a2 <= 0.0) {
        valid = false;
        break;
      }
      snr += a2 * p.rho[i] * p.rho[i] / (a2 * p.tau[i] + p.sigma_n2);
    }
    if (valid) best = std::max(best, snr);
  }
  return best;
}

/// Truncated-series solution of Sigma = sum_k A^k Q (A^T)^k.
inline Eigen::MatrixXd lyapunov_series(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                       int terms = 10000) {
  Eigen::MatrixXd sum = q;
  Eigen::MatrixXd term = q;
  for (int k = 1; k < terms; ++k) {
    term = a * term * a.transpose();
    sum += term;
    if (term.norm() < 1e-16 * sum.norm()) break;
  }
  return sum;
}

/// The covariance update exactly as usually printed:
/// P' = A P A^T - A P C^T (C P C^T + R)^-1 C P A^T + Q.
inline Eigen::MatrixXd riccati_printed(const Eigen::MatrixXd& p, const Eigen::MatrixXd& a,
                                       const Eigen::MatrixXd& q, const Eigen::MatrixXd& c,
                                       const Eigen::MatrixXd& r) {
  const Eigen::MatrixXd s = c * p * c.transpose() + r;
  return a * p * a.transpose() -
         a * p * c.transpose() * s.inverse() * c * p * a.transpose() + q;
}

/// Information-form update P' = A (P^-1 + C^T R^-1 C)^-1 A^T + Q (P must be
/// invertible).
inline Eigen::MatrixXd riccati_information(const Eigen::MatrixXd& p, const Eigen::MatrixXd& a,
                                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& c,
                                           const Eigen::MatrixXd& r) {
  const Eigen::MatrixXd info = p.inverse() + c.transpose() * r.inverse() * c;
  return a * info.inverse() * a.transpose() + q;
}

}  // namespace oracles
