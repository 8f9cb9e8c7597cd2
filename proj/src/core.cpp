#include "snkf/core.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace snkf {

ValidationError::ValidationError(std::vector<std::string> v)
    : Error([&v] {
        std::ostringstream os;
        os << "scenario validation failed:";
        for (const auto& s : v) os << "\n  - " << s;
        return os.str();
      }()),
      violations(std::move(v)) {}

InfeasibleError::InfeasibleError(const std::string& what, double margin_)
    : Error(what), margin(margin_) {}

bool SystemModel::stable() const { return std::isfinite(a) && std::abs(a) < 1.0; }

void SystemModel::require_stable() const {
  if (!stable()) throw InstabilityError("unstable system: |a| >= 1 (a = " + std::to_string(a) + ")");
}

ChannelRealization ChannelRealization::from_magnitudes(std::vector<double> h) {
  ChannelRealization c;
  c.kind_ = Kind::magnitude;
  c.magnitudes_ = std::move(h);
  return c;
}

ChannelRealization ChannelRealization::from_complex(std::vector<std::complex<double>> h) {
  ChannelRealization c;
  c.kind_ = Kind::complex_gain;
  c.magnitudes_.reserve(h.size());
  for (const auto& g : h) c.magnitudes_.push_back(std::abs(g));
  c.complex_ = std::move(h);
  return c;
}

const std::vector<std::complex<double>>& ChannelRealization::complex_gains() const {
  if (kind_ != Kind::complex_gain)
    throw DomainError("channel realization holds magnitudes only, not complex gains");
  return complex_;
}

Amplification Amplification::uniform(std::size_t m, double value) {
  return Amplification{std::vector<double>(m, value)};
}

double stationary_state_variance(const SystemModel& model) {
  model.require_stable();
  return model.sigma_w2 / (1.0 - model.a * model.a);
}

double transmit_power(double alpha, const Sensor& sensor, const SystemModel& model) {
  const double ex2 = stationary_state_variance(model);
  return alpha * alpha * (sensor.c * sensor.c * ex2 + sensor.sigma_v2);
}

std::vector<std::string> scenario_violations(const SystemModel& model, const SensorSet& sensors,
                                             const ChannelRealization& channels,
                                             const NoiseModel& noise,
                                             bool allow_zero_receiver_noise) {
  std::vector<std::string> v;
  auto finite = [](double x) { return std::isfinite(x); };

  if (!finite(model.a)) v.push_back("non-finite value: a");
  if (!finite(model.sigma_w2)) v.push_back("non-finite value: sigma_w2");
  if (finite(model.sigma_w2) && model.sigma_w2 <= 0.0)
    v.push_back("nonpositive variance: sigma_w2");

  if (sensors.size() == 0) v.push_back("empty sensor set (M must be >= 1)");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const Sensor& s = sensors[i];
    if (!finite(s.c)) v.push_back("non-finite value: sensor " + std::to_string(i) + " c");
    if (!finite(s.sigma_v2))
      v.push_back("non-finite value: sensor " + std::to_string(i) + " sigma_v2");
    else if (s.sigma_v2 <= 0.0)
      v.push_back("nonpositive variance: sensor " + std::to_string(i) + " sigma_v2");
  }

  if (channels.size() != sensors.size())
    v.push_back("dimension mismatch: " + std::to_string(channels.size()) + " channel gains for M = " +
                std::to_string(sensors.size()) + " sensors");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const double h = channels.magnitudes()[i];
    if (!finite(h))
      v.push_back("non-finite value: channel " + std::to_string(i));
    else if (channels.kind() == ChannelRealization::Kind::magnitude && h < 0.0)
      v.push_back("negative magnitude: channel " + std::to_string(i));
  }

  if (!finite(noise.sigma_n2)) {
    v.push_back("non-finite value: sigma_n2");
  } else if (noise.sigma_n2 < 0.0 || (noise.sigma_n2 == 0.0 && !allow_zero_receiver_noise)) {
    v.push_back("nonpositive variance: sigma_n2");
  }
  return v;
}

Scenario validate_scenario(SystemModel model, SensorSet sensors, ChannelRealization channels,
                           NoiseModel noise, bool allow_zero_receiver_noise) {
  auto v = scenario_violations(model, sensors, channels, noise, allow_zero_receiver_noise);
  if (!v.empty()) throw ValidationError(std::move(v));
  return Scenario{std::move(model), std::move(sensors), std::move(channels), noise};
}

}  // namespace snkf
