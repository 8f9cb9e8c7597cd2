#include "snkf/fading.hpp"

#include <cmath>
#include <complex>
#include <ostream>

#include "snkf/csv.hpp"
#include "snkf/kalman.hpp"
#include "snkf/rng.hpp"

namespace snkf::fading {

namespace {
// Stream tags within a simulation seed.
constexpr std::uint64_t kChannelTag = 0;
constexpr std::uint64_t kProcessTag = 1;
constexpr std::uint64_t kMeasurementTag = 2;
constexpr std::uint64_t kReceiverTag = 3;
}  // namespace

void FadingModel::validate() const {
  if (distances.empty() || distances.size() != means.size())
    throw DomainError("fading model: distances and means must be nonempty and equal length");
  for (double d : distances)
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("fading model: distances must be positive");
  for (double m : means)
    if (!std::isfinite(m)) throw DomainError("fading model: means must be finite");
  if (!(component_variance > 0.0)) throw DomainError("fading model: variance must be positive");
  if (!std::isfinite(path_loss_exponent)) throw DomainError("fading model: bad path-loss exponent");
}

std::vector<ChannelRealization> sample_channels(const FadingModel& fading, int steps,
                                                std::uint64_t seed) {
  fading.validate();
  if (steps < 1) throw DomainError("steps must be >= 1");
  const std::size_t m = fading.size();
  std::vector<rng::Stream> streams;
  streams.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    streams.emplace_back(rng::derive(seed, {kChannelTag, i}));

  const double sd = std::sqrt(fading.component_variance);
  std::vector<std::vector<std::complex<double>>> gains(steps,
                                                       std::vector<std::complex<double>>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double scale = std::pow(fading.distances[i], -fading.path_loss_exponent);
    for (int k = 0; k < steps; ++k) {
      const double re = scale * (fading.means[i] + sd * streams[i].normal());
      const double im = scale * (fading.means[i] + sd * streams[i].normal());
      gains[k][i] = {re, im};
    }
  }
  std::vector<ChannelRealization> out;
  out.reserve(steps);
  for (auto& g : gains) out.push_back(ChannelRealization::from_complex(std::move(g)));
  return out;
}

GreedyStep greedy_min_power_step(double p_k, const SystemModel& model, const SensorSet& sensors,
                                 const ChannelRealization& channel, const NoiseModel& noise,
                                 double d, Scheme scheme) {
  model.require_stable();
  if (!(p_k > 0.0)) throw DomainError("P_k must be positive");
  if (!(d > model.sigma_w2)) throw DomainError("covariance target must exceed sigma_w2");

  const double x = model.a * model.a * p_k + model.sigma_w2 - d;
  GreedyStep step;
  if (x <= 0.0) {
    // Open-loop update already meets the target; spend nothing.
    const std::size_t m = sensors.size();
    step.solution.alphas.assign(m, 0.0);
    step.solution.alphas_sq.assign(m, 0.0);
    step.solution.powers.assign(m, 0.0);
    step.p_next = model.a * model.a * p_k + model.sigma_w2;
    return step;
  }

  alloc::AllocationProblem prob = alloc::static_parameters(model, sensors, channel, noise);
  prob.objective = scheme == Scheme::multi_access ? alloc::Objective::min_sum_power_mac
                                                  : alloc::Objective::min_sum_power_orth;
  prob.x = x;
  prob.y = p_k * (d - model.sigma_w2);
  step.solution = scheme == Scheme::multi_access ? alloc::solve_p1(prob) : alloc::solve_p3(prob);
  step.transmitted = true;
  const double snr = alloc::generalized_snr(prob, step.solution.alphas);
  step.p_next = kalman::riccati_step_orth(p_k, snr, model);
  return step;
}

GreedyStep greedy_min_cov_step(double p_k, const SystemModel& model, const SensorSet& sensors,
                               const ChannelRealization& channel, const NoiseModel& noise,
                               double gamma_total, Scheme scheme) {
  model.require_stable();
  if (!(p_k > 0.0)) throw DomainError("P_k must be positive");
  alloc::AllocationProblem prob = alloc::build_static_problem(
      model, sensors, channel, noise, alloc::Constraint::budget(gamma_total), scheme);
  GreedyStep step;
  step.solution = scheme == Scheme::multi_access ? alloc::solve_p2(prob) : alloc::solve_p4(prob);
  step.transmitted = true;
  const double snr = alloc::generalized_snr(prob, step.solution.alphas);
  step.p_next = kalman::riccati_step_orth(p_k, snr, model);
  return step;
}

void GreedyTrace::write_csv(std::ostream& os) const {
  const std::size_t m = powers.empty() ? 0 : powers.front().size();
  os << "k,x_hat,P";
  for (std::size_t i = 1; i <= m; ++i) os << ",gamma_" << i;
  os << ",feasible,total_power\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    os << k << ',' << csv::format_double(x_hat[k]) << ',' << csv::format_double(p[k]);
    for (double g : powers[k]) os << ',' << csv::format_double(g);
    os << ',' << int(feasible[k]) << ',' << csv::format_double(total_power[k]) << "\n";
  }
}

GreedyTrace simulate_greedy(const SystemModel& model, const SensorSet& sensors,
                            const NoiseModel& noise, const FadingModel& fading,
                            const GreedyConfig& config) {
  model.require_stable();
  if (config.steps < 1) throw DomainError("steps must be >= 1");
  if (fading.size() != sensors.size())
    throw DomainError("fading model size does not match sensor set");

  const std::size_t m = sensors.size();
  const auto channels = sample_channels(fading, config.steps, config.seed);

  rng::Stream process(rng::derive(config.seed, {kProcessTag}));
  std::vector<rng::Stream> meas;
  meas.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    meas.emplace_back(rng::derive(config.seed, {kMeasurementTag, i}));
  rng::Stream receiver(rng::derive(config.seed, {kReceiverTag}));

  GreedyTrace trace;
  trace.scheme = config.scheme;
  const double sw = std::sqrt(model.sigma_w2);
  const double sn = std::sqrt(noise.sigma_n2);

  kalman::ScalarState state;
  state.x_hat = config.x0;
  state.p = config.p0.value_or(stationary_state_variance(model));
  double x = process.normal(0.0, std::sqrt(stationary_state_variance(model)));

  std::vector<double> zs(m), cs(m), rs(m);
  for (int k = 0; k < config.steps; ++k) {
    const ChannelRealization& ch = channels[static_cast<std::size_t>(k)];

    GreedyStep step;
    bool ok = true;
    if (config.constraint.kind == alloc::Constraint::Kind::covariance_target) {
      try {
        step = greedy_min_power_step(state.p, model, sensors, ch, noise,
                                     config.constraint.value, config.scheme);
      } catch (const InfeasibleError&) {
        if (config.policy == InfeasiblePolicy::strict) throw;
        ok = false;
        step = greedy_min_cov_step(state.p, model, sensors, ch, noise, config.gamma_cap,
                                   config.scheme);
      }
    } else {
      step = greedy_min_cov_step(state.p, model, sensors, ch, noise, config.constraint.value,
                                 config.scheme);
    }
    if (!ok) ++trace.infeasible_steps;

    trace.x_hat.push_back(state.x_hat);
    trace.p.push_back(state.p);
    trace.x_true.push_back(x);
    trace.feasible.push_back(ok ? 1 : 0);
    double total = 0.0;
    for (double g : step.solution.powers) total += g;
    trace.total_power.push_back(total);
    trace.powers.push_back(step.solution.powers);

    // Measurement and estimate update with the solved amplifications.
    const auto& h = ch.magnitudes();
    const auto& al = step.solution.alphas;
    if (config.scheme == Scheme::multi_access) {
      double c_bar = 0.0, r_bar = noise.sigma_n2, z = receiver.normal(0.0, sn);
      for (std::size_t i = 0; i < m; ++i) {
        const double ah = al[i] * h[i];
        c_bar += ah * sensors[i].c;
        r_bar += ah * ah * sensors[i].sigma_v2;
        z += ah * (sensors[i].c * x + meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2)));
      }
      const kalman::ScalarState next = kalman::filter_step_mac(state, z, c_bar, r_bar, model);
      state.x_hat = next.x_hat;
      state.p = step.p_next;  // solver and filter agree on the dynamics
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        const double ah = al[i] * h[i];
        cs[i] = ah * sensors[i].c;
        rs[i] = ah * ah * sensors[i].sigma_v2 + noise.sigma_n2;
        zs[i] = ah * (sensors[i].c * x + meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2))) +
                receiver.normal(0.0, sn);
      }
      const kalman::ScalarState next = kalman::filter_step_orth(state, zs, cs, rs, model);
      state.x_hat = next.x_hat;
      state.p = step.p_next;
    }
    x = model.a * x + process.normal(0.0, sw);
  }
  return trace;
}

}  // namespace snkf::fading
