#include "snkf/vecext.hpp"

#include <cmath>
#include <limits>

#include "snkf/rng.hpp"

namespace snkf::vecext {

namespace {

Matrix symmetrize(const Matrix& p) { return 0.5 * (p + p.transpose()); }

void check_step(const VectorSystem& system, const StepMatrices& step) {
  if (step.H.size() != system.sensors.size() || step.alpha.size() != system.sensors.size())
    throw DomainError("step matrices must match the sensor count");
  const int m = system.meas_dim();
  for (std::size_t i = 0; i < step.H.size(); ++i) {
    if (step.H[i].rows() != m || step.H[i].cols() != m || step.alpha[i].rows() != m ||
        step.alpha[i].cols() != m)
      throw DomainError("channel/amplification matrices must be m x m");
  }
}

}  // namespace

void VectorSystem::validate() const {
  const int n = state_dim();
  const int m = meas_dim();
  if (A.rows() != n || A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DomainError("A and Q must be n x n");
  if (N.rows() != m || N.cols() != m) throw DomainError("N must be m x m");
  if (sensors.empty()) throw DomainError("at least one sensor required");
  for (const auto& s : sensors) {
    if (s.C.rows() != m || s.C.cols() != n) throw DomainError("C_i must be m x n");
    if (s.R.rows() != m || s.R.cols() != m) throw DomainError("R_i must be m x m");
  }
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw DomainError("spectral radius of a non-square matrix");
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix lyapunov_state_covariance(const Matrix& a, const Matrix& q) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw DomainError("A and Q must be square and conformant");
  if (spectral_radius(a) >= 1.0)
    throw InstabilityError("lyapunov equation requires spectral radius < 1");

  if (n <= 20) {
    // vec(Sigma) solves (I - A (x) A) vec(Sigma) = vec(Q), column-major.
    Matrix k = Matrix::Identity(n * n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k.block(i * n, j * n, n, n) -= a(i, j) * a;
    Eigen::VectorXd vq(n * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) vq(j * n + i) = q(i, j);
    Eigen::VectorXd vs = k.partialPivLu().solve(vq);
    Matrix sigma(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) sigma(i, j) = vs(j * n + i);
    return symmetrize(sigma);
  }

  // Squaring iteration: S <- S + A_k S A_k^T, A_k <- A_k^2.
  Matrix s = q;
  Matrix ak = a;
  for (int it = 0; it < 200; ++it) {
    const Matrix add = ak * s * ak.transpose();
    s += add;
    if (add.norm() <= 1e-16 * s.norm()) break;
    ak = ak * ak;
  }
  return symmetrize(s);
}

double vector_transmit_power(const Matrix& alpha, const Matrix& c, const Matrix& sigma,
                             const Matrix& r) {
  return (alpha * (c * sigma * c.transpose() + r) * alpha.transpose()).trace();
}

std::vector<ObservationBlock> effective_blocks(const VectorSystem& system,
                                               const StepMatrices& step) {
  system.validate();
  check_step(system, step);
  std::vector<ObservationBlock> blocks;
  blocks.reserve(system.sensors.size());
  for (std::size_t i = 0; i < system.sensors.size(); ++i) {
    const Matrix ha = step.H[i] * step.alpha[i];
    ObservationBlock b;
    b.G = ha * system.sensors[i].C;
    b.W = symmetrize(ha * system.sensors[i].R * ha.transpose() + system.N);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

Matrix riccati_update(const Matrix& p, const Matrix& a, const Matrix& q, const Matrix& c,
                      const Matrix& r) {
  const Matrix s = c * p * c.transpose() + r;
  const Matrix k = s.ldlt().solve(c * p.transpose()).transpose();  // P C^T S^-1
  const Matrix j = Matrix::Identity(p.rows(), p.cols()) - k * c;
  const Matrix post = j * p * j.transpose() + k * r * k.transpose();
  return symmetrize(a * post * a.transpose() + q);
}

Matrix vector_riccati_step_mac(const Matrix& p, const VectorSystem& system,
                               const StepMatrices& step) {
  system.validate();
  check_step(system, step);
  const int m = system.meas_dim();
  const int n = system.state_dim();
  Matrix c_bar = Matrix::Zero(m, n);
  Matrix r_bar = system.N;
  for (std::size_t i = 0; i < system.sensors.size(); ++i) {
    const Matrix ha = step.H[i] * step.alpha[i];
    c_bar += ha * system.sensors[i].C;
    r_bar += ha * system.sensors[i].R * ha.transpose();
  }
  return riccati_update(p, system.A, system.Q, c_bar, symmetrize(r_bar));
}

Matrix riccati_step_orth_blocks(const Matrix& p, const Matrix& a, const Matrix& q,
                                std::span<const ObservationBlock> blocks) {
  const int n = static_cast<int>(p.rows());
  Matrix u = Matrix::Zero(n, n);
  for (const ObservationBlock& b : blocks)
    u += b.G.transpose() * b.W.ldlt().solve(b.G);
  // (P^-1 + U)^-1 = (I + P U)^-1 P, valid for singular P as well.
  const Matrix post = (Matrix::Identity(n, n) + p * symmetrize(u)).partialPivLu().solve(p);
  return symmetrize(a * symmetrize(post) * a.transpose() + q);
}

Matrix vector_riccati_step_orth(const Matrix& p, const VectorSystem& system,
                                const StepMatrices& step) {
  const auto blocks = effective_blocks(system, step);
  return riccati_step_orth_blocks(p, system.A, system.Q, blocks);
}

void MimoLayout::validate() const {
  if (antennas < 1) throw DomainError("antenna count must be >= 1");
  const std::size_t m = size();
  if (m == 0 || gains.size() != m || sigma_v2.size() != m || alphas.size() != m)
    throw DomainError("mimo layout: per-sensor lists must be nonempty and equal length");
  const Eigen::Index n = c.front().cols();
  for (const auto& row : c)
    if (row.cols() != n) throw DomainError("mimo layout: c rows must share one state dimension");
  for (const auto& g : gains)
    if (static_cast<int>(g.size()) != antennas)
      throw DomainError("mimo layout: one gain per antenna required");
  for (double v : sigma_v2)
    if (!(v > 0.0)) throw DomainError("mimo layout: sigma_v2 must be positive");
  if (!(sigma_n2 > 0.0)) throw DomainError("mimo layout: sigma_n2 must be positive");
}

std::vector<ObservationBlock> mimo_to_vector(const MimoLayout& layout) {
  layout.validate();
  const int l = layout.antennas;
  std::vector<ObservationBlock> blocks;
  blocks.reserve(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Eigen::VectorXd h(l);
    for (int j = 0; j < l; ++j) h(j) = layout.gains[i][static_cast<std::size_t>(j)];
    ObservationBlock b;
    b.G = layout.alphas[i] * h * layout.c[i];
    b.W = layout.alphas[i] * layout.alphas[i] * layout.sigma_v2[i] * h * h.transpose() +
          layout.sigma_n2 * Matrix::Identity(l, l);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

P5P6Evaluation evaluate_p5_p6(const VectorSystem& system, const StepMatrices& step,
                              const Matrix& p, double budget, Scheme scheme) {
  system.validate();
  check_step(system, step);
  const Matrix sigma = lyapunov_state_covariance(system.A, system.Q);
  P5P6Evaluation e;
  for (std::size_t i = 0; i < system.sensors.size(); ++i)
    e.total_power +=
        vector_transmit_power(step.alpha[i], system.sensors[i].C, sigma, system.sensors[i].R);
  e.feasible = e.total_power <= budget * (1.0 + 1e-12);
  const Matrix next = scheme == Scheme::multi_access ? vector_riccati_step_mac(p, system, step)
                                                     : vector_riccati_step_orth(p, system, step);
  e.trace_p_next = next.trace();
  return e;
}

RandomSearchResult random_search_p5_p6(const VectorSystem& system, const StepMatrices& channels,
                                       const Matrix& p, double budget, Scheme scheme, int draws,
                                       std::uint64_t seed) {
  system.validate();
  if (draws < 1) throw DomainError("draws must be >= 1");
  const int m = system.meas_dim();
  const Matrix sigma = lyapunov_state_covariance(system.A, system.Q);
  rng::Stream stream(rng::derive(seed, {7}));

  RandomSearchResult result;
  result.best_trace = std::numeric_limits<double>::infinity();
  for (int d = 0; d < draws; ++d) {
    StepMatrices cand = channels;
    double power = 0.0;
    for (std::size_t i = 0; i < cand.alpha.size(); ++i) {
      Matrix a(m, m);
      for (int r = 0; r < m; ++r)
        for (int cidx = 0; cidx < m; ++cidx) a(r, cidx) = stream.normal();
      cand.alpha[i] = a;
      power +=
          vector_transmit_power(a, system.sensors[i].C, sigma, system.sensors[i].R);
    }
    if (!(power > 0.0)) continue;
    const double scale = std::sqrt(budget / power);
    for (auto& a : cand.alpha) a *= scale;
    const P5P6Evaluation e = evaluate_p5_p6(system, cand, p, budget, scheme);
    if (e.trace_p_next < result.best_trace) {
      result.best_trace = e.trace_p_next;
      result.best = cand;
    }
  }
  return result;
}

}  // namespace snkf::vecext
