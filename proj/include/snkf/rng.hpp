#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace snkf::rng {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a sub-seed from a base seed and a path of indices (stream tag,
/// sensor index, realization index, ...). Different paths give independent
/// streams regardless of worker scheduling.
inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ (p + 0x9e3779b97f4a7c15ULL));
  return h;
}

/// Deterministic random stream: mt19937_64 with hand-rolled Box-Muller so
/// that sequences are identical across platforms and standard libraries.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * pi_ * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// chi-squared with one degree of freedom: square of a standard normal.
  double chi2_1() {
    const double z = normal();
    return z * z;
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  static constexpr double pi_ = 3.14159265358979323846;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace snkf::rng
