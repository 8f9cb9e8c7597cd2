#include "snkf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "snkf/alloc.hpp"
#include "snkf/asymptotics.hpp"
#include "snkf/fading.hpp"
#include "snkf/kalman.hpp"
#include "snkf/nocsi.hpp"
#include "snkf/rng.hpp"

namespace snkf::expt {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kSigmaFloor = 1e-8;  // chi-squared draws below this are resampled

std::vector<int> default_grid(int lo, int hi, int step) {
  std::vector<int> g;
  for (int m = lo; m <= hi; m += step) g.push_back(m);
  return g;
}

int thread_count(const Config& cfg, int jobs) {
  int t = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  return std::min(t, jobs);
}

template <typename F>
void parallel_for(int jobs, int threads, F&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futures;
  futures.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    futures.push_back(std::async(std::launch::async, [&, t] {
      for (int i = t; i < jobs; i += threads) fn(i);
    }));
  }
  for (auto& f : futures) f.get();
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

std::string fmt(double v) { return csv::format_double(v); }

csv::Table make_table(std::string description) {
  csv::Table t;
  t.comments.push_back(std::move(description));
  t.columns = {"M", "curve", "value", "stderr"};
  return t;
}

void add_summary_rows(csv::Table& t, const std::vector<int>& grid, const char* curve,
                      const std::vector<std::vector<double>>& per_m_values) {
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const Summary s = summarize(per_m_values[gi]);
    t.add_row({std::to_string(grid[gi]), curve, fmt(s.mean), fmt(s.stderr_of_mean)});
  }
}

/// Sensor draw shared by the static and fading experiments: c_i = 1,
/// sigma_i^2 chi-squared(1) with a resampling floor, distances uniform
/// in [20, 100].
struct DrawnSensors {
  SensorSet sensors;
  std::vector<double> distances;
  int resamples = 0;
};

DrawnSensors draw_sensors(int m, rng::Stream& stream) {
  DrawnSensors d;
  for (int i = 0; i < m; ++i) {
    double s2 = stream.chi2_1();
    while (s2 < kSigmaFloor) {
      s2 = stream.chi2_1();
      ++d.resamples;
    }
    d.sensors.sensors.push_back({1.0, s2});
    d.distances.push_back(20.0 + 80.0 * stream.uniform());
  }
  return d;
}

/// Total power of the equal-per-sensor rule scaled so the static SNR meets
/// the covariance target exactly; NaN when equal power cannot reach it.
double equal_power_total_for_target(const SystemModel& model, const SensorSet& sensors,
                                    const std::vector<double>& h, double sigma_n2, double d,
                                    Scheme scheme) {
  const double x = model.a * model.a * d + model.sigma_w2 - d;
  const double y = d * (d - model.sigma_w2);
  const double target = x / y;
  const std::size_t m = sensors.size();
  std::vector<double> e(m);  // alpha per unit sqrt(gamma)
  const double one_minus_a2 = 1.0 - model.a * model.a;
  for (std::size_t i = 0; i < m; ++i) {
    const Sensor& s = sensors[i];
    e[i] = std::sqrt(one_minus_a2 / (s.c * s.c * model.sigma_w2 + s.sigma_v2 * one_minus_a2));
  }
  if (scheme == Scheme::multi_access) {
    double sc = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sc += e[i] * h[i] * sensors[i].c;
      sb += e[i] * e[i] * h[i] * h[i] * sensors[i].sigma_v2;
    }
    const double a = sc * sc;
    if (a <= target * sb) return kNan;
    return static_cast<double>(m) * target * sigma_n2 / (a - target * sb);
  }
  auto snr = [&](double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double q = gamma * e[i] * e[i] * h[i] * h[i];
      s += q * sensors[i].c * sensors[i].c / (q * sensors[i].sigma_v2 + sigma_n2);
    }
    return s;
  };
  double sup = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    sup += sensors[i].c * sensors[i].c / sensors[i].sigma_v2;
  if (sup <= target) return kNan;
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (snr(hi) < target && ++guard < 2000) hi *= 10.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (snr(mid) < target ? lo : hi) = mid;
  }
  return static_cast<double>(m) * 0.5 * (lo + hi);
}

PairedCurves static_comparison_impl(const Config& cfg, Scheme scheme) {
  const std::vector<int> grid = cfg.m_grid.empty() ? default_grid(2, 20, 2) : cfg.m_grid;
  const int rels = cfg.realizations > 0 ? cfg.realizations : 1000;
  const int max_m = *std::max_element(grid.begin(), grid.end());

  const SystemModel model{0.9, 1.0};
  const NoiseModel noise{1e-9};
  const double target_d = 2.0;
  const double gamma_total = 1e-3;

  const std::size_t g = grid.size();
  std::vector<std::vector<double>> opt_power(g, std::vector<double>(rels, kNan));
  std::vector<std::vector<double>> eq_power = opt_power;
  std::vector<std::vector<double>> opt_cov = opt_power;
  std::vector<std::vector<double>> eq_cov = opt_power;

  parallel_for(rels, thread_count(cfg, rels), [&](int r) {
    rng::Stream stream(rng::derive(cfg.seed, {10, static_cast<std::uint64_t>(r)}));
    const DrawnSensors drawn = draw_sensors(max_m, stream);
    std::vector<double> h(drawn.distances.size());
    for (std::size_t i = 0; i < h.size(); ++i)
      h[i] = 1.0 / (drawn.distances[i] * drawn.distances[i]);

    for (std::size_t gi = 0; gi < g; ++gi) {
      const int m = grid[gi];
      SensorSet sensors;
      sensors.sensors.assign(drawn.sensors.sensors.begin(), drawn.sensors.sensors.begin() + m);
      std::vector<double> hm(h.begin(), h.begin() + m);
      const auto channels = ChannelRealization::from_magnitudes(hm);

      // (a) minimum power for the covariance target
      try {
        const auto prob = alloc::build_static_problem(model, sensors, channels, noise,
                                                      alloc::Constraint::covariance(target_d),
                                                      scheme);
        const auto sol = alloc::solve(prob);
        const double eq = equal_power_total_for_target(model, sensors, hm, noise.sigma_n2,
                                                       target_d, scheme);
        if (std::isfinite(eq)) {
          opt_power[gi][static_cast<std::size_t>(r)] = sol.total_power;
          eq_power[gi][static_cast<std::size_t>(r)] = eq;
        }
      } catch (const InfeasibleError&) {
        // skipped pair; reported through the summary counts
      }

      // (b) minimum covariance under the budget
      const auto prob = alloc::build_static_problem(model, sensors, channels, noise,
                                                    alloc::Constraint::budget(gamma_total),
                                                    scheme);
      const auto sol = alloc::solve(prob);
      opt_cov[gi][static_cast<std::size_t>(r)] =
          kalman::steady_state_from_snr(alloc::generalized_snr(prob, sol.alphas), model);
      const auto eq_alphas = asympt::equal_power_alphas(sensors, model, gamma_total,
                                                        asympt::PowerBudget::total);
      eq_cov[gi][static_cast<std::size_t>(r)] =
          kalman::steady_state_from_snr(alloc::generalized_snr(prob, eq_alphas.alphas), model);
    }
  });

  PairedCurves raw;
  raw.grid = grid;
  raw.a_first = std::move(opt_power);
  raw.a_second = std::move(eq_power);
  raw.b_first = std::move(opt_cov);
  raw.b_second = std::move(eq_cov);
  return raw;
}

std::vector<Dataset> static_comparison(const Config& cfg, Scheme scheme, const char* name_prefix) {
  const PairedCurves raw = static_comparison_impl(cfg, scheme);
  const int rels = raw.a_first.empty() ? 0 : static_cast<int>(raw.a_first.front().size());
  const char* scheme_name = scheme == Scheme::multi_access ? "multi-access" : "orthogonal";
  std::vector<Dataset> out;
  {
    Dataset d;
    d.name = std::string(name_prefix) + "a";
    d.table = make_table(std::string(scheme_name) +
                         " static channels: total power to hold the covariance target D=2");
    d.table.comments.push_back("realizations: " + std::to_string(rels));
    add_summary_rows(d.table, raw.grid, "optimal", raw.a_first);
    add_summary_rows(d.table, raw.grid, "equal", raw.a_second);
    out.push_back(std::move(d));
  }
  {
    Dataset d;
    d.name = std::string(name_prefix) + "b";
    d.table = make_table(std::string(scheme_name) +
                         " static channels: steady-state covariance under budget 1e-3");
    d.table.comments.push_back("realizations: " + std::to_string(rels));
    add_summary_rows(d.table, raw.grid, "optimal", raw.b_first);
    add_summary_rows(d.table, raw.grid, "equal", raw.b_second);
    out.push_back(std::move(d));
  }
  return out;
}

PairedCurves fading_comparison_impl(const Config& cfg, Scheme scheme) {
  const std::vector<int> grid = cfg.m_grid.empty() ? default_grid(2, 10, 2) : cfg.m_grid;
  const int rels = cfg.realizations > 0 ? cfg.realizations : 100;
  const int steps = cfg.steps > 0 ? cfg.steps : 1000;
  const int max_m = *std::max_element(grid.begin(), grid.end());

  const SystemModel model{0.9, 1.0};
  const NoiseModel noise{1e-9};
  const double target_d = 2.0;
  const double gamma_total = 1e-3;
  const double p0 = stationary_state_variance(model);

  const std::size_t g = grid.size();
  std::vector<std::vector<double>> csi_power(g, std::vector<double>(rels, kNan));
  std::vector<std::vector<double>> nocsi_power = csi_power;
  std::vector<std::vector<double>> csi_cov = csi_power;
  std::vector<std::vector<double>> nocsi_cov = csi_power;

  parallel_for(rels, thread_count(cfg, rels), [&](int r) {
    rng::Stream stream(rng::derive(cfg.seed, {20, static_cast<std::uint64_t>(r)}));
    const DrawnSensors drawn = draw_sensors(max_m, stream);
    std::vector<double> mu(static_cast<std::size_t>(max_m));
    for (auto& v : mu) v = 0.5 + 0.5 * stream.uniform();

    for (std::size_t gi = 0; gi < g; ++gi) {
      const int m = grid[gi];
      SensorSet sensors;
      sensors.sensors.assign(drawn.sensors.sensors.begin(), drawn.sensors.sensors.begin() + m);
      fading::FadingModel fm;
      fm.distances.assign(drawn.distances.begin(), drawn.distances.begin() + m);
      fm.means.assign(mu.begin(), mu.begin() + m);
      const auto stats = nocsi::statistics_from_fading(fm);
      const std::uint64_t run_seed =
          rng::derive(cfg.seed, {21, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(m)});
      const auto channels = fading::sample_channels(fm, steps, run_seed);

      // (a) covariance target: average per-step minimum power vs the
      // statistics-only allocation. Skipped unless both sides are feasible.
      try {
        const auto nocsi_sol =
            nocsi::allocate_nocsi(model, sensors, stats, noise,
                                  alloc::Constraint::covariance(target_d), scheme);
        double p = p0;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) {
          const auto step = fading::greedy_min_power_step(
              p, model, sensors, channels[static_cast<std::size_t>(k)], noise, target_d, scheme);
          acc += step.solution.total_power;
          p = step.p_next;
        }
        csi_power[gi][static_cast<std::size_t>(r)] = acc / steps;
        nocsi_power[gi][static_cast<std::size_t>(r)] = nocsi_sol.total_power;
      } catch (const InfeasibleError&) {
        // skipped pair
      }

      // (b) power budget: time-averaged covariance vs the statistics-only
      // steady state.
      {
        double p = p0;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) {
          const auto step = fading::greedy_min_cov_step(
              p, model, sensors, channels[static_cast<std::size_t>(k)], noise, gamma_total,
              scheme);
          p = step.p_next;
          acc += p;
        }
        csi_cov[gi][static_cast<std::size_t>(r)] = acc / steps;
        const auto sol = nocsi::allocate_nocsi(model, sensors, stats, noise,
                                               alloc::Constraint::budget(gamma_total), scheme);
        const auto eff =
            nocsi::build_effective_model(model, sensors, stats, sol.alphas, noise, scheme);
        nocsi_cov[gi][static_cast<std::size_t>(r)] = nocsi::steady_state_nocsi(eff, model);
      }
    }
  });

  PairedCurves raw;
  raw.grid = grid;
  raw.a_first = std::move(csi_power);
  raw.a_second = std::move(nocsi_power);
  raw.b_first = std::move(csi_cov);
  raw.b_second = std::move(nocsi_cov);
  return raw;
}

std::vector<Dataset> fading_comparison(const Config& cfg, Scheme scheme, const char* name_prefix) {
  const PairedCurves raw = fading_comparison_impl(cfg, scheme);
  const int rels = raw.a_first.empty() ? 0 : static_cast<int>(raw.a_first.front().size());
  const int steps = cfg.steps > 0 ? cfg.steps : 1000;
  const char* scheme_name = scheme == Scheme::multi_access ? "multi-access" : "orthogonal";
  std::vector<Dataset> out;
  {
    Dataset d;
    d.name = std::string(name_prefix) + "a";
    d.table = make_table(std::string(scheme_name) +
                         " fading: average power to hold D=2, full CSI vs channel statistics");
    d.table.comments.push_back("realizations: " + std::to_string(rels) +
                               ", steps: " + std::to_string(steps));
    add_summary_rows(d.table, raw.grid, "full_csi", raw.a_first);
    add_summary_rows(d.table, raw.grid, "no_csi", raw.a_second);
    out.push_back(std::move(d));
  }
  {
    Dataset d;
    d.name = std::string(name_prefix) + "b";
    d.table = make_table(std::string(scheme_name) +
                         " fading: covariance under budget 1e-3, full CSI vs channel statistics");
    d.table.comments.push_back("realizations: " + std::to_string(rels) +
                               ", steps: " + std::to_string(steps));
    add_summary_rows(d.table, raw.grid, "full_csi", raw.b_first);
    add_summary_rows(d.table, raw.grid, "no_csi", raw.b_second);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

Summary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  v.reserve(values.size());
  Summary s;
  for (double x : values) {
    if (std::isnan(x))
      ++s.skipped;
    else
      v.push_back(x);
  }
  s.count = static_cast<int>(v.size());
  if (v.empty()) {
    s.mean = kNan;
    s.stderr_of_mean = kNan;
    return s;
  }
  s.mean = pairwise_sum(v.data(), v.size()) / s.count;
  if (s.count > 1) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / (s.count - 1);
    s.stderr_of_mean = std::sqrt(var / s.count);
  }
  return s;
}

Dataset fig1(const Config& cfg) {
  const std::vector<int> grid = cfg.m_grid.empty() ? default_grid(2, 60, 2) : cfg.m_grid;
  asympt::SymmetricParams p;
  p.c = 1.0;
  p.sigma_v2 = 1.0;
  p.h = 0.8;
  p.model = {0.8, 1.5};
  p.sigma_n2 = 1.0;

  Dataset d;
  d.name = "fig1";
  d.table = make_table(
      "symmetric multi-access, alpha = 1/sqrt(M): exact steady state vs large-M approximation");
  for (int m : grid) {
    const double exact =
        asympt::exact_symmetric_p_inf(m, p, Scheme::multi_access, asympt::Scaling::inv_sqrt_m);
    d.table.add_row({std::to_string(m), "exact", fmt(exact), "0"});
  }
  for (int m : grid)
    d.table.add_row({std::to_string(m), "asymptotic", fmt(asympt::mac_scaled(m, p)), "0"});
  return d;
}

Dataset fig2(const Config& cfg) {
  const std::vector<int> grid = cfg.m_grid.empty() ? default_grid(10, 200, 10) : cfg.m_grid;
  const int rels = cfg.realizations > 0 ? cfg.realizations : 200;
  const int max_m = *std::max_element(grid.begin(), grid.end());
  const SystemModel model{0.9, 1.0};
  const double sigma_n2 = 1.0;
  const asympt::ParamBounds bounds{0.5, 1.0, 0.25, 1.0, 0.5, 1.0};

  const std::size_t g = grid.size();
  std::vector<std::vector<double>> exact(g, std::vector<double>(rels, kNan));
  parallel_for(rels, thread_count(cfg, rels), [&](int r) {
    rng::Stream stream(rng::derive(cfg.seed, {30, static_cast<std::uint64_t>(r)}));
    std::vector<double> hc(static_cast<std::size_t>(max_m)), h2s2(static_cast<std::size_t>(max_m));
    for (int i = 0; i < max_m; ++i) {
      const double c = 0.5 + 0.5 * stream.uniform();
      const double h = 0.5 + 0.5 * stream.uniform();
      const double sv = 0.5 + 0.5 * stream.uniform();  // sigma in [0.5, 1]
      hc[static_cast<std::size_t>(i)] = h * c;
      h2s2[static_cast<std::size_t>(i)] = h * h * sv * sv;
    }
    double sum_hc = 0.0, sum_h2s2 = 0.0;
    int used = 0;
    for (std::size_t gi = 0; gi < g; ++gi) {
      while (used < grid[gi]) {
        sum_hc += hc[static_cast<std::size_t>(used)];
        sum_h2s2 += h2s2[static_cast<std::size_t>(used)];
        ++used;
      }
      const double m = grid[gi];
      const double snr = (sum_hc * sum_hc / m) / (sum_h2s2 / m + sigma_n2);
      exact[gi][static_cast<std::size_t>(r)] = kalman::steady_state_from_snr(snr, model);
    }
  });

  Dataset d;
  d.name = "fig2";
  d.table = make_table(
      "multi-access, alpha = 1/sqrt(M), parameters drawn in [0.5, 1]: exact steady state with "
      "asymptotic sandwich");
  d.table.comments.push_back("realizations: " + std::to_string(rels));
  add_summary_rows(d.table, grid, "exact", exact);
  for (int m : grid) {
    const auto b = asympt::general_bounds(m, bounds, model, sigma_n2, asympt::Scaling::inv_sqrt_m);
    d.table.add_row({std::to_string(m), "lower", fmt(b.lower), "0"});
  }
  for (int m : grid) {
    const auto b = asympt::general_bounds(m, bounds, model, sigma_n2, asympt::Scaling::inv_sqrt_m);
    d.table.add_row({std::to_string(m), "upper", fmt(b.upper), "0"});
  }
  return d;
}

std::vector<Dataset> fig3(const Config& cfg) {
  return static_comparison(cfg, Scheme::multi_access, "fig3");
}

std::vector<Dataset> fig4(const Config& cfg) {
  return static_comparison(cfg, Scheme::orthogonal, "fig4");
}

std::vector<Dataset> fig5(const Config& cfg) {
  return fading_comparison(cfg, Scheme::multi_access, "fig5");
}

std::vector<Dataset> fig6(const Config& cfg) {
  return fading_comparison(cfg, Scheme::orthogonal, "fig6");
}

PairedCurves static_comparison_raw(const Config& cfg, Scheme scheme) {
  return static_comparison_impl(cfg, scheme);
}

PairedCurves fading_comparison_raw(const Config& cfg, Scheme scheme) {
  return fading_comparison_impl(cfg, scheme);
}

std::vector<Dataset> reproduce(const std::string& experiment_id, const Config& cfg) {
  if (experiment_id == "fig1") return {fig1(cfg)};
  if (experiment_id == "fig2") return {fig2(cfg)};
  if (experiment_id == "fig3") return fig3(cfg);
  if (experiment_id == "fig4") return fig4(cfg);
  if (experiment_id == "fig5") return fig5(cfg);
  if (experiment_id == "fig6") return fig6(cfg);
  throw DomainError("unknown experiment id: " + experiment_id);
}

}  // namespace snkf::expt
