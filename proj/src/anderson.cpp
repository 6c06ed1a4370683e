#include "anderson_pi/anderson.hpp"

#include <cmath>

#include "anderson_pi/errors.hpp"

namespace anderson_pi {

using linalg::norm2;
using linalg::norm_inf;

void AndersonHistory::push(std::span<const double> iterate, std::span<const double> image) {
  if (iterate.size() != image.size()) {
    throw ParameterError("AndersonHistory::push: iterate and image lengths differ");
  }
  if (!iterates_.empty() && iterate.size() != dim()) {
    throw ParameterError("AndersonHistory::push: vector dimension changed");
  }
  iterates_.emplace_back(iterate.begin(), iterate.end());
  images_.emplace_back(image.begin(), image.end());
  while (iterates_.size() > depth_ + 1) {
    iterates_.pop_front();
    images_.pop_front();
  }
}

void AndersonHistory::clear() {
  iterates_.clear();
  images_.clear();
}

const std::vector<double>& AndersonHistory::newest_iterate() const {
  if (empty()) throw StateError("AndersonHistory: empty");
  return iterates_.back();
}

const std::vector<double>& AndersonHistory::newest_image() const {
  if (empty()) throw StateError("AndersonHistory: empty");
  return images_.back();
}

HistoryMatrices build_history_matrices(const AndersonHistory& h) {
  if (h.empty()) throw StateError("build_history_matrices: empty history");
  const std::size_t n = h.dim();
  const std::size_t p = h.size() - 1;

  HistoryMatrices m{DenseMatrix(n, p + 1), DenseMatrix(n, p), DenseMatrix(n, p)};
  for (std::size_t j = 0; j <= p; ++j) {
    const auto& q = h.iterate(j);
    const auto& tq = h.image(j);
    for (std::size_t r = 0; r < n; ++r) m.residuals(r, j) = tq[r] - q[r];
  }
  // newest difference first
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t hi = p - i, lo = p - i - 1;
    const auto& qh = h.iterate(hi);
    const auto& ql = h.iterate(lo);
    for (std::size_t r = 0; r < n; ++r) {
      m.delta_q(r, i) = qh[r] - ql[r];
      m.delta_e(r, i) = m.residuals(r, hi) - m.residuals(r, lo);
    }
  }
  return m;
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Kkt: return "kkt";
    case SolverKind::Unconstrained: return "unconstrained";
    case SolverKind::Regularized: return "regularized";
    case SolverKind::Vanilla: return "vanilla";
  }
  return "?";
}

namespace {

struct RidgeSolve {
  std::vector<double> x;
  double jitter = 0.0;
  bool fallback = false;
};

// Solves (G + shift I) x = b after dividing through by the mean diagonal, so the
// jitter ladder in solve_spd acts relative to the data scale. Jitter is reported
// in the original units.
RidgeSolve solve_scaled(const DenseMatrix& g, double shift, std::span<const double> b) {
  const std::size_t p = g.rows();
  DenseMatrix a = g;
  for (std::size_t i = 0; i < p; ++i) a(i, i) += shift;
  double unit = linalg::trace(a) / static_cast<double>(p);
  if (!(unit > 0.0) || !std::isfinite(unit)) unit = 1.0;
  std::vector<double> rhs(b.begin(), b.end());
  for (std::size_t i = 0; i < p; ++i) {
    rhs[i] /= unit;
    for (std::size_t j = 0; j < p; ++j) a(i, j) /= unit;
  }
  try {
    auto sol = linalg::solve_spd(a, rhs);
    return {std::move(sol.x), sol.jitter * unit, false};
  } catch (const SingularSystemError& e) {
    return {std::vector<double>(p, 0.0), e.final_jitter() * unit, true};
  }
}

// tau_{p-1} = alpha_0, tau_{p-2} = alpha_0 + alpha_1, ...
std::vector<double> partial_sums(std::span<const double> alpha) {
  const std::size_t p = alpha.size() - 1;
  std::vector<double> tau(p);
  double partial = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    partial += alpha[j];
    tau[p - 1 - j] = partial;
  }
  return tau;
}

std::vector<double> unit_on_newest(std::size_t len) {
  std::vector<double> a(len, 0.0);
  a.back() = 1.0;
  return a;
}

void finish(MixingSolution& sol, const HistoryMatrices& m) {
  sol.gain_theta = gain_theta(m.residuals, sol.alpha);
  sol.gain_theta_l2 = gain_theta_l2(m.residuals, sol.alpha);
}

// Every solver here has the newest iterate as a feasible point, so in exact
// arithmetic ||E alpha||_2 <= ||e_k||_2. A larger value means the normal
// equations lost accuracy (near-collinear residuals); redo the same
// minimization by QR on the history itself.
void guard_accuracy(MixingSolution& sol, const HistoryMatrices& m, double shift) {
  if (sol.fallback || m.p() == 0 || !(sol.gain_theta_l2 > 1.0 + 1e-12)) return;
  sol.tau = linalg::least_squares_qr(m.delta_e, m.newest_residual(), shift);
  sol.alpha = tau_to_alpha(sol.tau);
  sol.refined = true;
  finish(sol, m);
}

MixingSolution solve_tau(const HistoryMatrices& m, double eta, SolverKind kind) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ParameterError("solve_tau_regularized: eta must be finite and >= 0");
  }
  MixingSolution sol;
  sol.solver_kind = kind;
  sol.eta = eta;
  if (m.p() == 0) {
    sol.alpha = {1.0};
    finish(sol, m);
    return sol;
  }
  const auto e = m.newest_residual();
  const auto rhs = linalg::multiply_transposed(m.delta_e, e);
  auto solved = solve_scaled(linalg::gram(m.delta_e), regularization_scale(m, eta), rhs);
  sol.tau = std::move(solved.x);
  sol.jitter = solved.jitter;
  sol.fallback = solved.fallback;
  sol.alpha = tau_to_alpha(sol.tau);
  finish(sol, m);
  guard_accuracy(sol, m, regularization_scale(m, eta));
  return sol;
}

}  // namespace

double regularization_scale(const HistoryMatrices& m, double eta) {
  if (eta == 0.0) return 0.0;
  const double fd = linalg::frobenius_norm(m.delta_q);
  const double fh = linalg::frobenius_norm(m.delta_e);
  return eta * (fd * fd + fh * fh);
}

MixingSolution solve_alpha_kkt(const HistoryMatrices& m) {
  const std::size_t cols = m.residuals.cols();
  if (cols == 0) throw StateError("solve_alpha_kkt: no residual columns");
  MixingSolution sol;
  sol.solver_kind = SolverKind::Kkt;
  if (cols == 1) {
    sol.alpha = {1.0};
    finish(sol, m);
    return sol;
  }
  const auto g = linalg::gram(m.residuals);
  if (linalg::trace(g) == 0.0) {
    // all residuals vanish: every alpha is optimal, keep the newest iterate
    sol.alpha = unit_on_newest(cols);
  } else {
    const std::vector<double> ones(cols, 1.0);
    auto solved = solve_scaled(g, 0.0, ones);
    double total = 0.0;
    for (double y : solved.x) total += y;
    sol.jitter = solved.jitter;
    if (solved.fallback || !(std::abs(total) > 0.0) || !std::isfinite(total)) {
      sol.alpha = unit_on_newest(cols);
      sol.fallback = true;
    } else {
      sol.alpha = std::move(solved.x);
      for (double& a : sol.alpha) a /= total;
    }
  }
  sol.tau = partial_sums(sol.alpha);
  finish(sol, m);
  guard_accuracy(sol, m, 0.0);
  return sol;
}

MixingSolution solve_tau_unconstrained(const HistoryMatrices& m) {
  return solve_tau(m, 0.0, SolverKind::Unconstrained);
}

MixingSolution solve_tau_regularized(const HistoryMatrices& m, double eta) {
  return solve_tau(m, eta, SolverKind::Regularized);
}

std::vector<double> tau_to_alpha(std::span<const double> tau) {
  const std::size_t p = tau.size();
  std::vector<double> alpha(p + 1);
  if (p == 0) {
    alpha[0] = 1.0;
    return alpha;
  }
  alpha[p] = 1.0 - tau[0];
  for (std::size_t i = 1; i < p; ++i) alpha[p - i] = tau[i - 1] - tau[i];
  alpha[0] = tau[p - 1];
  return alpha;
}

std::vector<double> alpha_to_tau(std::span<const double> alpha) {
  if (alpha.empty()) throw ParameterError("alpha_to_tau: empty alpha");
  double total = 0.0;
  for (double a : alpha) total += a;
  if (!(std::abs(total - 1.0) <= 1e-8)) {
    throw ParameterError("alpha_to_tau: alpha does not sum to 1");
  }
  return partial_sums(alpha);
}

DenseMatrix transform_matrix(std::size_t p) {
  DenseMatrix a(p + 1, p + 1);
  if (p == 0) {
    a(0, 0) = 1.0;
    return a;
  }
  a(0, p) = 1.0;
  for (std::size_t j = 1; j < p; ++j) {
    a(j, p - j) = 1.0;
    a(j, p - j + 1) = -1.0;
  }
  a(p, 0) = 1.0;
  a(p, 1) = -1.0;
  return a;
}

DenseMatrix transform_matrix_inverse(std::size_t p) {
  DenseMatrix inv(p + 1, p + 1);
  for (std::size_t j = 0; j <= p; ++j) inv(0, j) = 1.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j + i < p; ++j) inv(i + 1, j) = 1.0;
  return inv;
}

namespace {

constexpr double kConvergedResidual = 1e-14;

std::vector<double> combined_residual(const DenseMatrix& residuals,
                                      std::span<const double> alpha) {
  if (alpha.size() != residuals.cols()) {
    throw StateError("gain_theta: alpha length does not match history");
  }
  return linalg::multiply(residuals, alpha);
}

}  // namespace

double gain_theta(const DenseMatrix& residuals, std::span<const double> alpha) {
  const auto newest = residuals.column(residuals.cols() - 1);
  const double denom = norm_inf(newest);
  if (denom < kConvergedResidual) return 0.0;
  return norm_inf(combined_residual(residuals, alpha)) / denom;
}

double gain_theta_l2(const DenseMatrix& residuals, std::span<const double> alpha) {
  const auto newest = residuals.column(residuals.cols() - 1);
  if (norm_inf(newest) < kConvergedResidual) return 0.0;
  return norm2(combined_residual(residuals, alpha)) / norm2(newest);
}

std::vector<double> mixed_update(const AndersonHistory& h, const MixingSolution& sol,
                                 double beta) {
  if (h.empty()) throw StateError("mixed_update: empty history");
  if (sol.alpha.size() != h.size()) {
    throw StateError("mixed_update: alpha length does not match history length");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("mixed_update: beta outside [0,1]");
  const std::size_t n = h.dim();
  std::vector<double> qa(n, 0.0), ta(n, 0.0);
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double a = sol.alpha[j];
    const auto& q = h.iterate(j);
    const auto& tq = h.image(j);
    for (std::size_t r = 0; r < n; ++r) {
      qa[r] += a * q[r];
      ta[r] += a * tq[r];
    }
  }
  for (std::size_t r = 0; r < n; ++r) qa[r] = (1.0 - beta) * qa[r] + beta * ta[r];
  return qa;
}

QuasiNewtonStep quasi_newton_update(const AndersonHistory& h, double beta, double eta,
                                    bool materialize) {
  if (h.empty()) throw StateError("quasi_newton_update: empty history");
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ParameterError("quasi_newton_update: beta outside [0,1]");
  }
  const auto m = build_history_matrices(h);
  const auto e = m.newest_residual();
  const auto& q = h.newest_iterate();
  const std::size_t n = h.dim();

  QuasiNewtonStep step;
  step.next.resize(n);
  for (std::size_t r = 0; r < n; ++r) step.next[r] = q[r] + beta * e[r];
  if (m.p() > 0) {
    const auto rhs = linalg::multiply_transposed(m.delta_e, e);
    auto solved = solve_scaled(linalg::gram(m.delta_e), regularization_scale(m, eta), rhs);
    step.tau = std::move(solved.x);
    step.jitter = solved.jitter;
    step.fallback = solved.fallback;
    // (D + beta H) tau
    const auto dt = linalg::multiply(m.delta_q, step.tau);
    const auto ht = linalg::multiply(m.delta_e, step.tau);
    for (std::size_t r = 0; r < n; ++r) step.next[r] -= dt[r] + beta * ht[r];
  }
  if (materialize) step.g_tilde = materialize_update_matrix(m, beta, eta, step.jitter);
  return step;
}

DenseMatrix materialize_update_matrix(const HistoryMatrices& m, double beta, double eta,
                                      double jitter) {
  const std::size_t n = m.n();
  const std::size_t p = m.p();
  DenseMatrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) g(i, i) = -beta;
  if (p == 0) return g;

  DenseMatrix system = linalg::gram(m.delta_e);
  const double shift = regularization_scale(m, eta) + jitter;
  for (std::size_t i = 0; i < p; ++i) system(i, i) += shift;
  DenseMatrix k;  // (H^T H + shift I)^{-1} H^T, p x n
  if (!linalg::solve_general(system, linalg::transpose(m.delta_e), k)) {
    throw SingularSystemError("materialize_update_matrix: singular small system", shift);
  }
  DenseMatrix left(n, p);  // D + beta H
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) left(r, c) = m.delta_q(r, c) + beta * m.delta_e(r, c);
  const auto low_rank = linalg::multiply(left, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) += low_rank(i, j);
  return g;
}

}  // namespace anderson_pi
