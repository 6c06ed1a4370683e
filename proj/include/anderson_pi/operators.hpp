#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "anderson_pi/mdp.hpp"

namespace anderson_pi {

// State-action value table, row-major [state][action].
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
      : n_states_(n_states), n_actions_(n_actions), values_(n_states * n_actions, fill) {}
  QTable(std::size_t n_states, std::size_t n_actions, std::vector<double> values);

  static QTable zeros_like(const TabularMdp& mdp) { return {mdp.n_states(), mdp.n_actions()}; }

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * n_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * n_actions_ + a]; }

  std::span<const double> row(std::size_t s) const {
    return {values_.data() + s * n_actions_, n_actions_};
  }
  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

enum class OperatorKind { HardMax, MellowMax, BoltzmannSoftmax };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::HardMax;
  double omega = 1.0;  // inverse temperature; unused by HardMax

  static OperatorSpec hard_max() { return {OperatorKind::HardMax, 1.0}; }
  static OperatorSpec mellowmax(double omega) { return {OperatorKind::MellowMax, omega}; }
  static OperatorSpec boltzmann(double omega) { return {OperatorKind::BoltzmannSoftmax, omega}; }

  // Throws ParameterError when omega <= 0 for a soft operator.
  void check() const;
};

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

double hard_max(std::span<const double> row);

// (1/omega) log(mean(exp(omega * row))), max-shifted.
double mellowmax(std::span<const double> row, double omega);

// Gradient of mellowmax w.r.t. row: softmax(omega * row). Nonnegative, sums to 1.
std::vector<double> mellowmax_gradient(std::span<const double> row, double omega);

// sum_i row_i exp(omega row_i) / sum_i exp(omega row_i), max-shifted.
double boltzmann_softmax(std::span<const double> row, double omega);

double aggregate(std::span<const double> row, const OperatorSpec& op);

// (TQ)[s][a] = R[s][a] + gamma * sum_{s'} P[s][a][s'] * agg(Q[s'][.]).
// Parallel over (s, a) with OpenMP; bitwise equal to apply_bellman_serial.
QTable apply_bellman(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op);
QTable apply_bellman_serial(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op);

// TQ - Q.
QTable residual(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op);

// argmax per state, lowest index wins ties.
std::vector<std::size_t> greedy_policy(const QTable& q);

}  // namespace anderson_pi
