#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snkf/core.hpp"
#include "snkf/csv.hpp"

namespace snkf::expt {

struct Config {
  std::vector<int> m_grid;  // empty: experiment default
  int realizations = 0;     // 0: experiment default
  int steps = 0;            // 0: experiment default
  std::uint64_t seed = 1;
  int threads = 0;          // 0: hardware concurrency
};

/// One emitted CSV: columns M,curve,value,stderr.
struct Dataset {
  std::string name;
  csv::Table table;
};

/// Steady state vs sensor count for the symmetric bounded-power setup,
/// with the large-M approximation overlaid. Deterministic.
Dataset fig1(const Config& cfg);

/// Steady state for random bounded parameters with the asymptotic
/// lower/upper sandwich overlaid.
Dataset fig2(const Config& cfg);

/// Static channels, optimal vs equal power allocation, multi-access:
/// (a) sum power under a covariance target, (b) covariance under a budget.
std::vector<Dataset> fig3(const Config& cfg);

/// As fig3 for the orthogonal scheme.
std::vector<Dataset> fig4(const Config& cfg);

/// Fading channels, full CSI (greedy per step) vs channel statistics only,
/// multi-access: (a) covariance target, (b) power budget.
std::vector<Dataset> fig5(const Config& cfg);

/// As fig5 for the orthogonal scheme.
std::vector<Dataset> fig6(const Config& cfg);

/// Dispatch by experiment id ("fig1".."fig6").
std::vector<Dataset> reproduce(const std::string& experiment_id, const Config& cfg);

/// Raw per-realization values behind the comparison experiments, used for
/// paired statistical tests. Indexed [grid point][realization]; NaN marks a
/// skipped realization (same positions in the paired curves).
struct PairedCurves {
  std::vector<int> grid;
  std::vector<std::vector<double>> a_first;   // dataset (a), first curve
  std::vector<std::vector<double>> a_second;  // dataset (a), second curve
  std::vector<std::vector<double>> b_first;   // dataset (b), first curve
  std::vector<std::vector<double>> b_second;  // dataset (b), second curve
};

PairedCurves static_comparison_raw(const Config& cfg, Scheme scheme);
PairedCurves fading_comparison_raw(const Config& cfg, Scheme scheme);

/// Order-independent mean/stderr reduction (pairwise summation); NaN entries
/// mark skipped realizations and are excluded.
struct Summary {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int count = 0;
  int skipped = 0;
};
Summary summarize(const std::vector<double>& values);

}  // namespace snkf::expt
