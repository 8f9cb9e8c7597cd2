#include "snkf/asymptotics.hpp"

#include <cmath>

#include "snkf/kalman.hpp"

namespace snkf::asympt {

void SymmetricParams::validate() const {
  if (c == 0.0 || !std::isfinite(c)) throw DomainError("symmetric params: c must be nonzero");
  if (h <= 0.0 || !std::isfinite(h)) throw DomainError("symmetric params: h must be positive");
  if (sigma_v2 <= 0.0 || !std::isfinite(sigma_v2))
    throw DomainError("symmetric params: sigma_v2 must be positive");
  if (sigma_n2 < 0.0 || !std::isfinite(sigma_n2))
    throw DomainError("symmetric params: sigma_n2 must be nonnegative");
}

double symmetric_snr(double m, const SymmetricParams& p, Scheme scheme, Scaling scaling) {
  p.validate();
  if (m < 1.0) throw DomainError("M must be >= 1");
  const double h2c2 = p.h * p.h * p.c * p.c;
  const double h2s2 = p.h * p.h * p.sigma_v2;
  if (scheme == Scheme::multi_access) {
    if (scaling == Scaling::none) return m * m * h2c2 / (m * h2s2 + p.sigma_n2);
    return m * h2c2 / (h2s2 + p.sigma_n2);
  }
  if (scaling == Scaling::none) return m * h2c2 / (h2s2 + p.sigma_n2);
  return m * h2c2 / (h2s2 + m * p.sigma_n2);
}

double exact_symmetric_p_inf(double m, const SymmetricParams& p, Scheme scheme, Scaling scaling) {
  return kalman::steady_state_from_snr(symmetric_snr(m, p, scheme, scaling), p.model);
}

double mac_noscale(double m, const SymmetricParams& p) {
  p.validate();
  p.model.require_stable();
  const double a2 = p.model.a * p.model.a;
  return p.model.sigma_w2 + a2 * p.sigma_v2 / (p.c * p.c * m);
}

double orth_noscale(double m, const SymmetricParams& p) {
  p.validate();
  p.model.require_stable();
  const double a2 = p.model.a * p.model.a;
  return p.model.sigma_w2 + a2 * (p.sigma_v2 + p.sigma_n2 / (p.h * p.h)) / (p.c * p.c * m);
}

double mac_scaled(double m, const SymmetricParams& p) { return orth_noscale(m, p); }

ScaledOrthExpansion orth_scaled_limit(const SymmetricParams& p) {
  p.validate();
  p.model.require_stable();
  const double a2 = p.model.a * p.model.a;
  const double sw2 = p.model.sigma_w2;
  const double sn2 = p.sigma_n2;
  const double h2c2 = p.h * p.h * p.c * p.c;
  const double disc = (a2 - 1.0) * (a2 - 1.0) * sn2 * sn2 +
                      2.0 * (a2 + 1.0) * sn2 * h2c2 * sw2 + h2c2 * h2c2 * sw2 * sw2;
  const double root = std::sqrt(disc);
  ScaledOrthExpansion e;
  e.limit = ((a2 - 1.0) * sn2 + h2c2 * sw2 + root) / (2.0 * h2c2);
  e.coeff = (a2 - 1.0) * p.sigma_v2 / (2.0 * p.c * p.c) +
            ((a2 + 1.0) * std::pow(p.h, 4) * p.sigma_v2 * p.c * p.c * sw2 +
             (a2 - 1.0) * (a2 - 1.0) * sn2 * p.h * p.h * p.sigma_v2) /
                (2.0 * h2c2 * root);
  return e;
}

void ParamBounds::validate() const {
  auto ok = [](double lo, double hi) {
    return std::isfinite(lo) && std::isfinite(hi) && 0.0 < lo && lo <= hi;
  };
  if (!ok(c_min, c_max) || !ok(sigma_min2, sigma_max2) || !ok(h_min, h_max))
    throw DomainError("parameter bounds must satisfy 0 < min <= max");
}

BoundPair general_bounds(double m, const ParamBounds& bounds, const SystemModel& model,
                         double sigma_n2, Scaling scaling) {
  bounds.validate();
  model.require_stable();
  if (sigma_n2 < 0.0) throw DomainError("sigma_n2 must be nonnegative");
  const double a2 = model.a * model.a;
  const double noise = scaling == Scaling::inv_sqrt_m ? sigma_n2 : 0.0;
  BoundPair b;
  b.lower = model.sigma_w2 + a2 * (bounds.h_min * bounds.h_min * bounds.sigma_min2 + noise) /
                                (bounds.h_max * bounds.h_max * bounds.c_max * bounds.c_max * m);
  b.upper = model.sigma_w2 + a2 * (bounds.h_max * bounds.h_max * bounds.sigma_max2 + noise) /
                                (bounds.h_min * bounds.h_min * bounds.c_min * bounds.c_min * m);
  return b;
}

Amplification equal_power_alphas(const SensorSet& sensors, const SystemModel& model,
                                 double budget, PowerBudget kind) {
  model.require_stable();
  if (budget <= 0.0 || !std::isfinite(budget)) throw DomainError("power budget must be positive");
  const double m = static_cast<double>(sensors.size());
  if (m < 1.0) throw DomainError("sensor set is empty");
  const double gamma = kind == PowerBudget::per_sensor ? budget : budget / m;
  const double one_minus_a2 = 1.0 - model.a * model.a;
  Amplification a;
  a.alphas.reserve(sensors.size());
  for (const Sensor& s : sensors.sensors) {
    a.alphas.push_back(std::sqrt(gamma * one_minus_a2 /
                                 (s.c * s.c * model.sigma_w2 + s.sigma_v2 * one_minus_a2)));
  }
  return a;
}

double ideal_rate_bound(const SensorSet& sensors, const SystemModel& model) {
  double s = 0.0;
  for (const Sensor& sen : sensors.sensors) {
    if (sen.sigma_v2 <= 0.0) throw DomainError("sigma_v2 must be positive");
    s += sen.c * sen.c / sen.sigma_v2;
  }
  return kalman::steady_state_from_snr(s, model);
}

std::vector<std::pair<double, double>> alternating_blocks_orth_scaled(
    const SymmetricParams& first, const SymmetricParams& second, int levels) {
  first.validate();
  second.validate();
  if (levels < 1) throw DomainError("levels must be >= 1");
  if (first.model.a != second.model.a || first.model.sigma_w2 != second.model.sigma_w2 ||
      first.sigma_n2 != second.sigma_n2)
    throw DomainError("alternating blocks require a common model and receiver noise");

  // Block j holds 10^j sensors of the alternating parameter set. With
  // alpha^2 = 1/M the per-sensor contribution to S^o is
  // (h^2 c^2 / M) / (h^2 sigma_v2 / M + sigma_n2).
  std::vector<std::pair<double, double>> out;
  std::vector<std::pair<double, const SymmetricParams*>> blocks;
  double total = 0.0;
  for (int j = 1; j <= levels; ++j) {
    blocks.emplace_back(std::pow(10.0, j), (j % 2 == 1) ? &first : &second);
    total += blocks.back().first;
    double s = 0.0;
    for (const auto& [count, p] : blocks) {
      const double h2c2 = p->h * p->h * p->c * p->c;
      const double h2s2 = p->h * p->h * p->sigma_v2;
      s += count * (h2c2 / total) / (h2s2 / total + p->sigma_n2);
    }
    out.emplace_back(total, kalman::steady_state_from_snr(s, first.model));
  }
  return out;
}

}  // namespace snkf::asympt
