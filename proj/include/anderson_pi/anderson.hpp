#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anderson_pi/linalg.hpp"

namespace anderson_pi {

using linalg::DenseMatrix;

// Sliding window of the last m+1 iterates Q^(k-m..k) and their images TQ,
// oldest first. Vectors are flattened Q-tables of equal length.
class AndersonHistory {
 public:
  explicit AndersonHistory(std::size_t depth) : depth_(depth) {}

  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return iterates_.size(); }
  bool empty() const noexcept { return iterates_.empty(); }
  std::size_t dim() const noexcept { return iterates_.empty() ? 0 : iterates_.front().size(); }

  // Appends (Q, TQ), evicting the oldest pair beyond depth + 1 entries.
  void push(std::span<const double> iterate, std::span<const double> image);
  void clear();

  const std::vector<double>& iterate(std::size_t i) const { return iterates_[i]; }
  const std::vector<double>& image(std::size_t i) const { return images_[i]; }
  const std::vector<double>& newest_iterate() const;
  const std::vector<double>& newest_image() const;

 private:
  std::size_t depth_;
  std::deque<std::vector<double>> iterates_;
  std::deque<std::vector<double>> images_;
};

// With p + 1 history entries:
//   residuals  E   = [e_{k-p}, ..., e_k]                       n x (p+1)
//   delta_q    D_k = [d_k, d_{k-1}, ..., d_{k-p+1}]            n x p,  d_j = Q_j - Q_{j-1}
//   delta_e    H_k = [e_k - e_{k-1}, ..., e_{k-p+1} - e_{k-p}] n x p
struct HistoryMatrices {
  DenseMatrix residuals;
  DenseMatrix delta_q;
  DenseMatrix delta_e;

  std::size_t n() const noexcept { return residuals.rows(); }
  std::size_t p() const noexcept { return delta_e.cols(); }
  std::vector<double> newest_residual() const { return residuals.column(residuals.cols() - 1); }
};

HistoryMatrices build_history_matrices(const AndersonHistory& h);

enum class SolverKind { Kkt, Unconstrained, Regularized, Vanilla };
std::string to_string(SolverKind kind);

struct MixingSolution {
  std::vector<double> alpha;  // length p+1, oldest first, sums to 1
  std::vector<double> tau;    // length p
  double gain_theta = 0.0;     // ||E alpha||_inf / ||e_k||_inf
  double gain_theta_l2 = 0.0;  // ||E alpha||_2 / ||e_k||_2
  SolverKind solver_kind = SolverKind::Vanilla;
  double eta = 0.0;
  double jitter = 0.0;    // diagonal shift used by the small solve, 0 if none
  bool fallback = false;  // solve failed; alpha replaced by the vanilla step
  bool refined = false;   // normal equations were inaccurate; re-solved by QR
};

// alpha = (E^T E)^{-1} 1 / 1^T (E^T E)^{-1} 1
MixingSolution solve_alpha_kkt(const HistoryMatrices& m);

// tau = argmin ||e_k - H tau||_2
MixingSolution solve_tau_unconstrained(const HistoryMatrices& m);

// tau = (H^T H + eta (||D||_F^2 + ||H||_F^2) I)^{-1} H^T e_k
MixingSolution solve_tau_regularized(const HistoryMatrices& m, double eta);

// eta * (||D_k||_F^2 + ||H_k||_F^2)
double regularization_scale(const HistoryMatrices& m, double eta);

// alpha_p = 1 - tau_0, alpha_{p-i} = tau_{i-1} - tau_i, alpha_0 = tau_{p-1}.
std::vector<double> tau_to_alpha(std::span<const double> tau);
// tau_i = sum_{j=0}^{p-i-1} alpha_j. Throws ParameterError if sum(alpha) != 1 (1e-8).
std::vector<double> alpha_to_tau(std::span<const double> alpha);

// The (p+1)x(p+1) map alpha = A (1, tau)^T, and its inverse.
DenseMatrix transform_matrix(std::size_t p);
DenseMatrix transform_matrix_inverse(std::size_t p);

double gain_theta(const DenseMatrix& residuals, std::span<const double> alpha);
double gain_theta_l2(const DenseMatrix& residuals, std::span<const double> alpha);

// (1 - beta) sum alpha_i Q_i + beta sum alpha_i TQ_i
std::vector<double> mixed_update(const AndersonHistory& h, const MixingSolution& sol,
                                 double beta);

struct QuasiNewtonStep {
  std::vector<double> next;
  std::vector<double> tau;
  double jitter = 0.0;
  bool fallback = false;
  std::optional<DenseMatrix> g_tilde;  // set only when materialization was requested
};

// Q_k - G~ e_k, applied as Q_k + beta e_k - (D_k + beta H_k) tau without
// forming G~. eta = 0 gives the unregularized G_k.
QuasiNewtonStep quasi_newton_update(const AndersonHistory& h, double beta, double eta,
                                    bool materialize = false);

// -beta I + (D_k + beta H_k)(H^T H + (scale + jitter) I)^{-1} H^T, n x n.
DenseMatrix materialize_update_matrix(const HistoryMatrices& m, double beta, double eta,
                                      double jitter = 0.0);

}  // namespace anderson_pi
