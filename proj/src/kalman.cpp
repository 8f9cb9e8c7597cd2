#include "snkf/kalman.hpp"

#include <cmath>
#include <ostream>
#include <utility>

#include "snkf/csv.hpp"
#include "snkf/rng.hpp"

namespace snkf::kalman {

namespace {

void check_mac_inputs(const Amplification& alphas, const ChannelRealization& channels,
                      const SensorSet& sensors) {
  if (alphas.size() != sensors.size() || channels.size() != sensors.size())
    throw DomainError("dimension mismatch between alphas, channels and sensors");
}

}  // namespace

SnrDecomposition mac_snr(const Amplification& alphas, const ChannelRealization& channels,
                         const SensorSet& sensors, const NoiseModel& noise) {
  check_mac_inputs(alphas, channels, sensors);
  const auto& h = channels.magnitudes();
  double c_bar = 0.0;
  double r_bar = noise.sigma_n2;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const double ah = alphas.alphas[i] * h[i];
    c_bar += ah * sensors[i].c;
    r_bar += ah * ah * sensors[i].sigma_v2;
  }
  if (r_bar <= 0.0)
    throw DegenerateSnrError("zero effective noise and zero signal: SNR undefined");
  SnrDecomposition d;
  d.scheme = Scheme::multi_access;
  d.c_bar = c_bar;
  d.r_bar = r_bar;
  d.snr = c_bar * c_bar / r_bar;
  return d;
}

SnrDecomposition orth_snr(const Amplification& alphas, const ChannelRealization& channels,
                          const SensorSet& sensors, const NoiseModel& noise) {
  check_mac_inputs(alphas, channels, sensors);
  const auto& h = channels.magnitudes();
  double s = 0.0;
  bool any_live = false;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const double ah = alphas.alphas[i] * h[i];
    const double den = ah * ah * sensors[i].sigma_v2 + noise.sigma_n2;
    if (den <= 0.0) continue;  // silent sensor: no signal, no noise
    any_live = true;
    s += ah * ah * sensors[i].c * sensors[i].c / den;
  }
  if (!any_live)
    throw DegenerateSnrError("zero effective noise and zero signal: SNR undefined");
  SnrDecomposition d;
  d.scheme = Scheme::orthogonal;
  d.snr = s;
  return d;
}

double riccati_step_mac(double p, double c_bar, double r_bar, const SystemModel& model) {
  if (p < 0.0) throw DomainError("negative covariance");
  if (r_bar <= 0.0) throw DomainError("riccati step requires r_bar > 0");
  return model.a * model.a * p * r_bar / (c_bar * c_bar * p + r_bar) + model.sigma_w2;
}

double riccati_step_orth(double p, double s_o, const SystemModel& model) {
  if (p < 0.0) throw DomainError("negative covariance");
  if (s_o < 0.0) throw DomainError("negative SNR");
  return model.a * model.a * p / (1.0 + p * s_o) + model.sigma_w2;
}

double steady_state_from_snr(double snr, const SystemModel& model) {
  model.require_stable();
  if (snr < 0.0) throw DomainError("negative SNR");
  const double a2 = model.a * model.a;
  const double sw2 = model.sigma_w2;
  if (snr == 0.0) return sw2 / (1.0 - a2);
  const double x = a2 - 1.0 + sw2 * snr;
  const double root = std::sqrt(x * x + 4.0 * sw2 * snr);
  // Conjugate form when x < 0 avoids cancellation for small S.
  if (x >= 0.0) return (x + root) / (2.0 * snr);
  return 2.0 * sw2 / (root - x);
}

ScalarState filter_step_mac(const ScalarState& prior, double z, double c_bar, double r_bar,
                            const SystemModel& model) {
  if (r_bar <= 0.0) throw DomainError("filter step requires r_bar > 0");
  const double p = prior.p;
  const double denom = c_bar * c_bar * p + r_bar;
  const double x_post = prior.x_hat + p * c_bar / denom * (z - c_bar * prior.x_hat);
  ScalarState next;
  next.x_hat = model.a * x_post;
  next.p = model.a * model.a * p * r_bar / denom + model.sigma_w2;
  return next;
}

ScalarState filter_step_orth(const ScalarState& prior, std::span<const double> z,
                             std::span<const double> c, std::span<const double> r,
                             const SystemModel& model) {
  if (z.size() != c.size() || z.size() != r.size())
    throw DomainError("dimension mismatch in orthogonal filter step");
  // Independent blocks and a scalar state: accumulate information directly.
  double u = 0.0;  // sum c_i^2 / r_i (= S^o)
  double v = 0.0;  // sum c_i z_i / r_i
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (r[i] <= 0.0) throw DomainError("filter step requires positive noise variances");
    u += c[i] * c[i] / r[i];
    v += c[i] * z[i] / r[i];
  }
  const double gain_den = 1.0 + prior.p * u;
  const double x_post = (prior.x_hat + prior.p * v) / gain_den;
  ScalarState next;
  next.x_hat = model.a * x_post;
  next.p = model.a * model.a * prior.p / gain_den + model.sigma_w2;
  return next;
}

AmplificationSchedule::AmplificationSchedule(Amplification constant) : constant_(true) {
  steps_.push_back(std::move(constant));
}

AmplificationSchedule::AmplificationSchedule(std::vector<Amplification> per_step)
    : steps_(std::move(per_step)), constant_(false) {
  if (steps_.empty()) throw DomainError("empty amplification schedule");
}

const Amplification& AmplificationSchedule::at(int k) const {
  if (constant_) return steps_.front();
  if (k < 0 || static_cast<std::size_t>(k) >= steps_.size())
    throw DomainError("amplification schedule index out of range");
  return steps_[static_cast<std::size_t>(k)];
}

void FilterTrace::write_csv(std::ostream& os) const {
  const std::size_t m = powers.empty() ? 0 : powers.front().size();
  os << "k,x_hat,P";
  for (std::size_t i = 1; i <= m; ++i) os << ",gamma_" << i;
  os << "\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    os << k << ',' << csv::format_double(x_hat[k]) << ',' << csv::format_double(p[k]);
    for (double g : powers[k]) os << ',' << csv::format_double(g);
    os << "\n";
  }
}

FilterTrace run_filter(const Scenario& scenario, const AmplificationSchedule& schedule,
                       const FilterOptions& options) {
  const SystemModel& model = scenario.model;
  const SensorSet& sensors = scenario.sensors;
  const std::size_t m = sensors.size();
  if (options.steps < 1) throw DomainError("steps must be >= 1");

  FilterTrace trace;
  trace.scheme = options.scheme;
  trace.x_hat.reserve(options.steps);
  trace.p.reserve(options.steps);
  trace.powers.reserve(options.steps);
  trace.x_true.reserve(options.steps);

  rng::Stream process(rng::derive(options.seed, {1}));
  std::vector<rng::Stream> meas;
  meas.reserve(m);
  for (std::size_t i = 0; i < m; ++i) meas.emplace_back(rng::derive(options.seed, {2, i}));
  rng::Stream receiver(rng::derive(options.seed, {3}));

  const double sw = std::sqrt(model.sigma_w2);
  const double sn = std::sqrt(scenario.noise.sigma_n2);
  const auto& h = scenario.channels.magnitudes();

  ScalarState state;
  state.x_hat = options.x0;
  state.p = options.p0.value_or(stationary_state_variance(model));
  double x = process.normal(0.0, std::sqrt(stationary_state_variance(model)));

  std::vector<double> zs(m), cs(m), rs(m);
  for (int k = 0; k < options.steps; ++k) {
    const Amplification& alphas = schedule.at(k);
    if (alphas.size() != m) throw DomainError("amplification size mismatch");

    trace.x_hat.push_back(state.x_hat);
    trace.p.push_back(state.p);
    trace.x_true.push_back(x);
    std::vector<double> gam(m);
    for (std::size_t i = 0; i < m; ++i)
      gam[i] = transmit_power(alphas.alphas[i], sensors[i], model);
    trace.powers.push_back(std::move(gam));

    if (options.scheme == Scheme::multi_access) {
      const auto d = mac_snr(alphas, scenario.channels, sensors, scenario.noise);
      double z = *d.c_bar * x + receiver.normal(0.0, sn);
      for (std::size_t i = 0; i < m; ++i)
        z += alphas.alphas[i] * h[i] * meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2));
      state = filter_step_mac(state, z, *d.c_bar, *d.r_bar, model);
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        const double ah = alphas.alphas[i] * h[i];
        cs[i] = ah * sensors[i].c;
        rs[i] = ah * ah * sensors[i].sigma_v2 + scenario.noise.sigma_n2;
        zs[i] = ah * (sensors[i].c * x + meas[i].normal(0.0, std::sqrt(sensors[i].sigma_v2))) +
                receiver.normal(0.0, sn);
      }
      state = filter_step_orth(state, zs, cs, rs, model);
    }
    x = model.a * x + process.normal(0.0, sw);
  }
  return trace;
}

SchemeComparison compare_schemes(const Scenario& scenario, const Amplification& alphas) {
  const SensorSet& sensors = scenario.sensors;
  check_mac_inputs(alphas, scenario.channels, sensors);

  Amplification adjusted = alphas;
  SchemeComparison cmp;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    if (adjusted.alphas[i] * sensors[i].c < 0.0) {
      adjusted.alphas[i] = -adjusted.alphas[i];
      cmp.flipped_sensors.push_back(i);
    }
  }

  cmp.snr_mac = mac_snr(adjusted, scenario.channels, sensors, scenario.noise).snr;
  cmp.snr_orth = orth_snr(adjusted, scenario.channels, sensors, scenario.noise).snr;
  cmp.p_inf_mac = steady_state_from_snr(cmp.snr_mac, scenario.model);
  cmp.p_inf_orth = steady_state_from_snr(cmp.snr_orth, scenario.model);

  const double tol = 1e-9 * std::max({cmp.snr_mac, cmp.snr_orth, 1.0});
  if (std::abs(cmp.snr_mac - cmp.snr_orth) <= tol)
    cmp.tag = Dominance::tie;
  else
    cmp.tag = cmp.snr_mac > cmp.snr_orth ? Dominance::mac : Dominance::orthogonal;
  return cmp;
}

}  // namespace snkf::kalman
