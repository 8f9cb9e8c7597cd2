#include "snkf/nocsi.hpp"

#include <cmath>

#include "snkf/kalman.hpp"
#include "snkf/rng.hpp"

namespace snkf::nocsi {

namespace {

constexpr double kDetGuard = 1e-300;

struct BlockSolve {
  double quad = 0.0;  // c^T R^-1 c
  double lin = 0.0;   // c^T R^-1 z
};

BlockSolve solve_block(const EffectiveBlock& b, double z1, double z2) {
  const double det = b.r11 * b.r22 - b.r12 * b.r12;
  if (!(det > kDetGuard)) throw DomainError("effective noise block is numerically singular");
  BlockSolve s;
  s.quad = (b.c_re * b.c_re * b.r22 - 2.0 * b.c_re * b.c_im * b.r12 + b.c_im * b.c_im * b.r11) / det;
  s.lin = (b.c_re * (b.r22 * z1 - b.r12 * z2) + b.c_im * (b.r11 * z2 - b.r12 * z1)) / det;
  return s;
}

double block_quad(const EffectiveBlock& b) { return solve_block(b, 0.0, 0.0).quad; }

}  // namespace

ComponentStats ComponentStats::from_gaussian(double mean_re, double mean_im, double var_re,
                                             double var_im) {
  ComponentStats s;
  s.mean_re = mean_re;
  s.mean_im = mean_im;
  s.var_re = var_re;
  s.var_im = var_im;
  s.e2_re = var_re + mean_re * mean_re;
  s.e2_im = var_im + mean_im * mean_im;
  return s;
}

double ComponentStats::mean_abs() const { return std::hypot(mean_re, mean_im); }

void ComponentStats::validate() const {
  for (double v : {mean_re, mean_im, var_re, var_im, e2_re, e2_im})
    if (!std::isfinite(v)) throw DomainError("channel statistics must be finite");
  if (var_re < 0.0 || var_im < 0.0) throw DomainError("channel statistics: negative variance");
  // Second moments are definitionally var + mean^2; reject inconsistent input.
  const double scale = std::max({1.0, e2_re, e2_im});
  if (std::abs(e2_re - var_re - mean_re * mean_re) > 1e-9 * scale ||
      std::abs(e2_im - var_im - mean_im * mean_im) > 1e-9 * scale)
    throw DomainError("channel statistics: second moments inconsistent with mean/variance");
}

ChannelStatistics statistics_from_fading(const fading::FadingModel& fading) {
  fading.validate();
  ChannelStatistics stats;
  stats.per_sensor.reserve(fading.size());
  for (std::size_t i = 0; i < fading.size(); ++i) {
    const double scale = std::pow(fading.distances[i], -fading.path_loss_exponent);
    const double mean = scale * fading.means[i];
    const double var = scale * scale * fading.component_variance;
    stats.per_sensor.push_back(ComponentStats::from_gaussian(mean, mean, var, var));
  }
  return stats;
}

std::vector<std::complex<double>> mean_beamform_alphas(std::span<const double> alphas,
                                                       const ChannelStatistics& stats) {
  if (alphas.size() != stats.size()) throw DomainError("alpha length mismatch");
  std::vector<std::complex<double>> out;
  out.reserve(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const ComponentStats& s = stats.per_sensor[i];
    const double mu = s.mean_abs();
    if (!(mu > 0.0))
      throw DomainError("circularly symmetric fading unusable: sensor " + std::to_string(i) +
                        " has zero-mean channel");
    out.emplace_back(alphas[i] * s.mean_re / mu, -alphas[i] * s.mean_im / mu);
  }
  return out;
}

AmplifiedMoments amplified_moments(const ComponentStats& stats, std::complex<double> alpha_tilde) {
  stats.validate();
  const double ar = alpha_tilde.real();
  const double ai = alpha_tilde.imag();
  AmplifiedMoments m;
  // Re[a h] = ar h_re - ai h_im, Im[a h] = ar h_im + ai h_re, components independent.
  m.e_re = ar * stats.mean_re - ai * stats.mean_im;
  m.e_im = ar * stats.mean_im + ai * stats.mean_re;
  m.var_re = ar * ar * stats.var_re + ai * ai * stats.var_im;
  m.var_im = ar * ar * stats.var_im + ai * ai * stats.var_re;
  m.e2_re = m.var_re + m.e_re * m.e_re;
  m.e2_im = m.var_im + m.e_im * m.e_im;
  return m;
}

std::vector<AmplifiedMoments> derive_moments(const ChannelStatistics& stats,
                                             std::span<const double> alphas) {
  const auto at = mean_beamform_alphas(alphas, stats);
  std::vector<AmplifiedMoments> out;
  out.reserve(at.size());
  for (std::size_t i = 0; i < at.size(); ++i)
    out.push_back(amplified_moments(stats.per_sensor[i], at[i]));
  return out;
}

EffectiveModel build_effective_model(const SystemModel& model, const SensorSet& sensors,
                                     const ChannelStatistics& stats,
                                     std::span<const std::complex<double>> alpha_tilde,
                                     const NoiseModel& noise, Scheme scheme) {
  model.require_stable();
  if (stats.size() != sensors.size() || alpha_tilde.size() != sensors.size())
    throw DomainError("dimension mismatch in effective model");
  if (!(noise.sigma_n2 > 0.0)) throw DomainError("sigma_n2 must be positive");
  const double ex2 = stationary_state_variance(model);

  EffectiveModel eff;
  eff.scheme = scheme;
  auto sensor_block = [&](std::size_t i) {
    const AmplifiedMoments m = amplified_moments(stats.per_sensor[i], alpha_tilde[i]);
    const Sensor& s = sensors[i];
    EffectiveBlock b;
    b.c_re = m.e_re * s.c;
    b.c_im = m.e_im * s.c;
    b.r11 = m.var_re * s.c * s.c * ex2 + m.e2_re * s.sigma_v2;
    b.r22 = m.var_im * s.c * s.c * ex2 + m.e2_im * s.sigma_v2;
    b.r12 = m.e_re * m.e_im * s.sigma_v2;
    return b;
  };

  if (scheme == Scheme::multi_access) {
    EffectiveBlock agg;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const EffectiveBlock b = sensor_block(i);
      agg.c_re += b.c_re;
      agg.c_im += b.c_im;
      agg.r11 += b.r11;
      agg.r12 += b.r12;
      agg.r22 += b.r22;
    }
    agg.r11 += noise.sigma_n2;
    agg.r22 += noise.sigma_n2;
    eff.blocks.push_back(agg);
  } else {
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      EffectiveBlock b = sensor_block(i);
      b.r11 += noise.sigma_n2;
      b.r22 += noise.sigma_n2;
      eff.blocks.push_back(b);
    }
  }
  for (const EffectiveBlock& b : eff.blocks) eff.s_stat += block_quad(b);
  return eff;
}

EffectiveModel build_effective_model(const SystemModel& model, const SensorSet& sensors,
                                     const ChannelStatistics& stats,
                                     std::span<const double> alphas, const NoiseModel& noise,
                                     Scheme scheme) {
  const auto at = mean_beamform_alphas(alphas, stats);
  return build_effective_model(model, sensors, stats, at, noise, scheme);
}

MmseState mmse_filter_step(const MmseState& prior, std::span<const double> z,
                           const EffectiveModel& eff, const SystemModel& model) {
  if (z.size() != 2 * eff.blocks.size())
    throw DomainError("measurement must hold (Re, Im) per block");
  double quad = 0.0, lin = 0.0;
  for (std::size_t b = 0; b < eff.blocks.size(); ++b) {
    const BlockSolve s = solve_block(eff.blocks[b], z[2 * b], z[2 * b + 1]);
    quad += s.quad;
    lin += s.lin;
  }
  const double den = 1.0 + prior.p * quad;
  MmseState next;
  const double x_post = (prior.x_hat + prior.p * lin) / den;
  const double p_post = prior.p / den;
  next.x_hat = model.a * x_post;
  next.p = model.a * model.a * p_post + model.sigma_w2;
  return next;
}

double steady_state_nocsi(const EffectiveModel& eff, const SystemModel& model) {
  return kalman::steady_state_from_snr(eff.s_stat, model);
}

alloc::AllocationProblem build_nocsi_problem(const SystemModel& model, const SensorSet& sensors,
                                             const ChannelStatistics& stats,
                                             const NoiseModel& noise,
                                             const alloc::Constraint& constraint, Scheme scheme) {
  model.require_stable();
  if (stats.size() != sensors.size()) throw DomainError("dimension mismatch in statistics");
  if (!(noise.sigma_n2 > 0.0)) throw DomainError("sigma_n2 must be positive");
  const double ex2 = stationary_state_variance(model);

  // Unit-alpha moments; the derived quantities are degree-2 homogeneous in
  // alpha, which makes tau alpha-free. Asserted numerically at alpha = 2.
  std::vector<double> unit(sensors.size(), 1.0);
  const auto m1 = derive_moments(stats, unit);
  std::vector<double> two(sensors.size(), 2.0);
  const auto m2 = derive_moments(stats, two);

  alloc::AllocationProblem p;
  p.sigma_n2 = noise.sigma_n2;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const double scale = std::max(1.0, m2[i].e2_re);
    if (std::abs(m2[i].var_re - 4.0 * m1[i].var_re) > 1e-9 * scale ||
        std::abs(m2[i].e2_re - 4.0 * m1[i].e2_re) > 1e-9 * scale)
      throw DomainError("internal: derived moments are not degree-2 homogeneous");
    const Sensor& s = sensors[i];
    p.kappa.push_back(s.c * s.c * ex2 + s.sigma_v2);
    p.rho.push_back(stats.per_sensor[i].mean_abs() * s.c);
    p.tau.push_back(m1[i].var_re * s.c * s.c * ex2 + m1[i].e2_re * s.sigma_v2);
  }

  if (constraint.kind == alloc::Constraint::Kind::covariance_target) {
    const double d = constraint.value;
    const double upper = stationary_state_variance(model);
    if (!(model.sigma_w2 < d && d < upper))
      throw DomainError("covariance target outside (sigma_w2, sigma_w2/(1-a^2))");
    p.x = model.a * model.a * d + model.sigma_w2 - d;
    p.y = d * (d - model.sigma_w2);
    p.objective = scheme == Scheme::multi_access ? alloc::Objective::min_sum_power_mac
                                                 : alloc::Objective::min_sum_power_orth;
  } else {
    p.gamma_total = constraint.value;
    p.objective = scheme == Scheme::multi_access ? alloc::Objective::min_covariance_mac
                                                 : alloc::Objective::min_covariance_orth;
  }
  p.validate();
  return p;
}

alloc::AllocationSolution allocate_nocsi(const SystemModel& model, const SensorSet& sensors,
                                         const ChannelStatistics& stats, const NoiseModel& noise,
                                         const alloc::Constraint& constraint, Scheme scheme) {
  return alloc::solve(build_nocsi_problem(model, sensors, stats, noise, constraint, scheme));
}

NocsiTrace simulate_nocsi(const SystemModel& model, const SensorSet& sensors,
                          const NoiseModel& noise, const ChannelStatistics& stats,
                          std::span<const double> alphas, int steps, std::uint64_t seed,
                          std::optional<double> p0, Scheme scheme) {
  model.require_stable();
  if (steps < 1) throw DomainError("steps must be >= 1");
  const std::size_t m = sensors.size();
  if (alphas.size() != m || stats.size() != m)
    throw DomainError("dimension mismatch in no-CSI simulation");

  const auto alpha_tilde = mean_beamform_alphas(alphas, stats);
  const EffectiveModel eff =
      build_effective_model(model, sensors, stats, alpha_tilde, noise, scheme);

  std::vector<rng::Stream> chan;
  chan.reserve(m);
  for (std::size_t i = 0; i < m; ++i) chan.emplace_back(rng::derive(seed, {100, i}));
  rng::Stream process(rng::derive(seed, {101}));
  std::vector<rng::Stream> meas;
  meas.reserve(m);
  for (std::size_t i = 0; i < m; ++i) meas.emplace_back(rng::derive(seed, {102, i}));
  rng::Stream receiver(rng::derive(seed, {103}));

  const double sw = std::sqrt(model.sigma_w2);
  const double sn = std::sqrt(noise.sigma_n2);
  MmseState state;
  state.p = p0.value_or(stationary_state_variance(model));
  double x = process.normal(0.0, std::sqrt(stationary_state_variance(model)));

  NocsiTrace trace;
  std::vector<double> z(2 * eff.blocks.size());
  std::vector<std::complex<double>> gains(m);
  for (int k = 0; k < steps; ++k) {
    trace.x_hat.push_back(state.x_hat);
    trace.p.push_back(state.p);
    trace.x_true.push_back(x);

    for (std::size_t i = 0; i < m; ++i) {
      const ComponentStats& cs = stats.per_sensor[i];
      gains[i] = {chan[i].normal(cs.mean_re, std::sqrt(cs.var_re)),
                  chan[i].normal(cs.mean_im, std::sqrt(cs.var_im))};
    }
    if (scheme == Scheme::multi_access) {
      std::complex<double> zt(receiver.normal(0.0, sn), receiver.normal(0.0, sn));
      for (std::size_t i = 0; i < m; ++i) {
        const double y =
            sensors[i].c * x + meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2));
        zt += alpha_tilde[i] * gains[i] * y;
      }
      z[0] = zt.real();
      z[1] = zt.imag();
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        const double y =
            sensors[i].c * x + meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2));
        const std::complex<double> zi =
            alpha_tilde[i] * gains[i] * y +
            std::complex<double>(receiver.normal(0.0, sn), receiver.normal(0.0, sn));
        z[2 * i] = zi.real();
        z[2 * i + 1] = zi.imag();
      }
    }
    state = mmse_filter_step(state, z, eff, model);
    x = model.a * x + process.normal(0.0, sw);
  }
  return trace;
}

}  // namespace snkf::nocsi
