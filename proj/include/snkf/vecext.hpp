#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "snkf/core.hpp"

namespace snkf::vecext {

using Matrix = Eigen::MatrixXd;

struct VectorSensor {
  Matrix C;  // m x n observation
  Matrix R;  // m x m measurement noise covariance (PSD)
};

struct VectorSystem {
  Matrix A;  // n x n
  Matrix Q;  // n x n process noise covariance (PSD)
  std::vector<VectorSensor> sensors;
  Matrix N;  // m x m receiver noise covariance (PD)

  int state_dim() const { return static_cast<int>(A.rows()); }
  int meas_dim() const { return static_cast<int>(N.rows()); }
  void validate() const;
};

/// Per-step channel and amplification matrices, one m x m pair per sensor.
struct StepMatrices {
  std::vector<Matrix> H;
  std::vector<Matrix> alpha;
};

double spectral_radius(const Matrix& a);

/// Solves Sigma - A Sigma A^T = Q. Vectorised (Kronecker) solve for
/// n <= 20, squaring iteration beyond. Requires spectral radius < 1.
Matrix lyapunov_state_covariance(const Matrix& a, const Matrix& q);

/// gamma = Tr(alpha (C Sigma C^T + R) alpha^T).
double vector_transmit_power(const Matrix& alpha, const Matrix& c, const Matrix& sigma,
                             const Matrix& r);

/// One observation block z = G x + e with Cov[e] = W.
struct ObservationBlock {
  Matrix G;
  Matrix W;
};

/// Per-sensor effective blocks G_i = H_i alpha_i C_i,
/// W_i = H_i alpha_i R_i alpha_i^T H_i^T + N.
std::vector<ObservationBlock> effective_blocks(const VectorSystem& system,
                                               const StepMatrices& step);

/// Generic measurement-update + predict in Joseph form (numerically PSD):
/// P' = A [(I-KC) P (I-KC)^T + K R K^T] A^T + Q with K = P C^T (C P C^T + R)^-1.
/// Algebraically equal to A P A^T - A P C^T (C P C^T + R)^-1 C P A^T + Q.
Matrix riccati_update(const Matrix& p, const Matrix& a, const Matrix& q, const Matrix& c,
                      const Matrix& r);

/// Multi-access step: the fusion center sees the coherent sum, so
/// C = sum G_i and R = sum (W_i - N) + N.
Matrix vector_riccati_step_mac(const Matrix& p, const VectorSystem& system,
                               const StepMatrices& step);

/// Orthogonal step via per-sensor block inverses:
/// U = sum G_i^T W_i^-1 G_i, P' = A (I + P U)^-1 P A^T + Q. The stacked
/// (mM x mM) inverse is never formed.
Matrix vector_riccati_step_orth(const Matrix& p, const VectorSystem& system,
                                const StepMatrices& step);

/// Same, from prebuilt blocks (also the entry point for MIMO layouts).
Matrix riccati_step_orth_blocks(const Matrix& p, const Matrix& a, const Matrix& q,
                                std::span<const ObservationBlock> blocks);

/// A fusion center with multiple receive antennas: sensor i's scalar
/// measurement reaches antenna j through gain h[i][j]. The shared
/// measurement noise makes each sensor's L x L block covariance rank-one
/// plus sigma_n2 I.
struct MimoLayout {
  int antennas = 1;
  std::vector<Eigen::RowVectorXd> c;       // per-sensor 1 x n rows
  std::vector<std::vector<double>> gains;  // [sensor][antenna]
  std::vector<double> sigma_v2;
  std::vector<double> alphas;
  double sigma_n2 = 1.0;

  std::size_t size() const { return c.size(); }
  void validate() const;
};

/// Equivalent stacked observation for one step: per-sensor blocks
/// G_i = alpha_i (h_i^1..h_i^L)^T c_i, W_i = alpha_i^2 sigma_v2 h h^T + sigma_n2 I.
std::vector<ObservationBlock> mimo_to_vector(const MimoLayout& layout);

struct P5P6Evaluation {
  double trace_p_next = 0.0;
  double total_power = 0.0;
  bool feasible = false;
};

/// Pure evaluation of the vector allocation problems: total transmit power
/// against the budget and the resulting one-step covariance trace. No
/// optimiser behind this; the problems are non-convex.
P5P6Evaluation evaluate_p5_p6(const VectorSystem& system, const StepMatrices& step,
                              const Matrix& p, double budget, Scheme scheme);

struct RandomSearchResult {
  double best_trace = 0.0;
  StepMatrices best;
};

/// Baseline only: best of `draws` random feasible amplification draws
/// (each scaled onto the budget surface). Makes no optimality claim.
RandomSearchResult random_search_p5_p6(const VectorSystem& system, const StepMatrices& channels,
                                       const Matrix& p, double budget, Scheme scheme, int draws,
                                       std::uint64_t seed);

}  // namespace snkf::vecext
