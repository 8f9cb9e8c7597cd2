#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "snkf/errors.hpp"

namespace snkf {

/// Medium access: all sensors on one coherent channel, or one channel each.
enum class Scheme { multi_access, orthogonal };

/// Scalar linear system x_{k+1} = a x_k + w_k, Var[w_k] = sigma_w2.
struct SystemModel {
  double a = 0.0;
  double sigma_w2 = 1.0;

  bool stable() const;
  /// Throws InstabilityError unless |a| < 1.
  void require_stable() const;
};

/// One sensor observing y = c x + v, Var[v] = sigma_v2.
/// c may be negative; sigma_v2 must be positive.
struct Sensor {
  double c = 1.0;
  double sigma_v2 = 1.0;
};

struct SensorSet {
  std::vector<Sensor> sensors;

  std::size_t size() const { return sensors.size(); }
  const Sensor& operator[](std::size_t i) const { return sensors[i]; }
};

/// Receiver noise variance per real dimension.
struct NoiseModel {
  double sigma_n2 = 1.0;
};

/// Channel gains for one time step. Two kinds:
///  - magnitude: real h_i >= 0, the beamformed known-channel case;
///  - complex_gain: complex h_i, used when simulating unknown channels.
/// Magnitudes are always available; for complex gains they are |h_i|.
class ChannelRealization {
 public:
  enum class Kind { magnitude, complex_gain };

  static ChannelRealization from_magnitudes(std::vector<double> h);
  static ChannelRealization from_complex(std::vector<std::complex<double>> h);

  Kind kind() const { return kind_; }
  std::size_t size() const { return magnitudes_.size(); }
  const std::vector<double>& magnitudes() const { return magnitudes_; }
  const std::vector<std::complex<double>>& complex_gains() const;

 private:
  ChannelRealization() = default;
  Kind kind_ = Kind::magnitude;
  std::vector<double> magnitudes_;
  std::vector<std::complex<double>> complex_;
};

/// Real amplification magnitudes alpha_i. Under transmitter beamforming the
/// complex factor alpha_i * conj(h_i)/|h_i| is implied and never stored.
struct Amplification {
  std::vector<double> alphas;

  std::size_t size() const { return alphas.size(); }
  static Amplification uniform(std::size_t m, double value);
};

/// Stationary variance of the state process, sigma_w2 / (1 - a^2).
/// Throws InstabilityError for |a| >= 1.
double stationary_state_variance(const SystemModel& model);

/// Transmit power used by a sensor forwarding with amplification alpha:
/// gamma = alpha^2 (c^2 sigma_w2/(1-a^2) + sigma_v2).
double transmit_power(double alpha, const Sensor& sensor, const SystemModel& model);

struct Scenario {
  SystemModel model;
  SensorSet sensors;
  ChannelRealization channels;
  NoiseModel noise;
};

/// Collects every invariant violation; empty result means the scenario is
/// consistent. Receiver noise must be positive unless explicitly allowed
/// to be zero (scheme comparisons accept a noiseless fusion center).
std::vector<std::string> scenario_violations(const SystemModel& model,
                                             const SensorSet& sensors,
                                             const ChannelRealization& channels,
                                             const NoiseModel& noise,
                                             bool allow_zero_receiver_noise = false);

/// Returns a validated scenario or throws ValidationError carrying the
/// complete violation list.
Scenario validate_scenario(SystemModel model, SensorSet sensors, ChannelRealization channels,
                           NoiseModel noise, bool allow_zero_receiver_noise = false);

}  // namespace snkf
