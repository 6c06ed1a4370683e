#include "anderson_pi/operators.hpp"

#include <algorithm>
#include <cmath>

#include "anderson_pi/errors.hpp"

namespace anderson_pi {

QTable::QTable(std::size_t n_states, std::size_t n_actions, std::vector<double> values)
    : n_states_(n_states), n_actions_(n_actions), values_(std::move(values)) {
  if (values_.size() != n_states_ * n_actions_) {
    throw ParameterError("QTable: value count does not match n_states * n_actions");
  }
}

bool QTable::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void OperatorSpec::check() const {
  if (kind != OperatorKind::HardMax && !(omega > 0.0 && std::isfinite(omega))) {
    throw ParameterError("OperatorSpec: omega must be a positive finite number");
  }
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::HardMax: return "max";
    case OperatorKind::MellowMax: return "mellowmax";
    case OperatorKind::BoltzmannSoftmax: return "softmax";
  }
  return "?";
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "max" || name == "hardmax") return OperatorKind::HardMax;
  if (name == "mellowmax" || name == "mm") return OperatorKind::MellowMax;
  if (name == "softmax" || name == "boltzmann") return OperatorKind::BoltzmannSoftmax;
  throw ParameterError("unknown operator '" + name + "' (expected max, mellowmax, softmax)");
}

namespace {

void require_nonempty(std::span<const double> row, const char* who) {
  if (row.empty()) throw ParameterError(std::string(who) + ": empty row");
}

void require_omega(double omega, const char* who) {
  if (!(omega > 0.0)) throw ParameterError(std::string(who) + ": omega must be positive");
}

}  // namespace

double hard_max(std::span<const double> row) {
  require_nonempty(row, "hard_max");
  return *std::max_element(row.begin(), row.end());
}

double mellowmax(std::span<const double> row, double omega) {
  require_nonempty(row, "mellowmax");
  require_omega(omega, "mellowmax");
  const double top = *std::max_element(row.begin(), row.end());
  // mean(exp(w(x - top))) - 1, accumulated through expm1 so that omega -> 0 stays exact
  double excess = 0.0;
  for (double x : row) excess += std::expm1(omega * (x - top));
  excess /= static_cast<double>(row.size());
  const double value = top + std::log1p(excess) / omega;
  // clamp the last ulp so the bounding property holds exactly
  const double lo = *std::min_element(row.begin(), row.end());
  return std::clamp(value, lo, top);
}

std::vector<double> mellowmax_gradient(std::span<const double> row, double omega) {
  require_nonempty(row, "mellowmax_gradient");
  require_omega(omega, "mellowmax_gradient");
  const double top = *std::max_element(row.begin(), row.end());
  std::vector<double> g(row.size());
  double total = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    g[i] = std::exp(omega * (row[i] - top));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

double boltzmann_softmax(std::span<const double> row, double omega) {
  require_nonempty(row, "boltzmann_softmax");
  require_omega(omega, "boltzmann_softmax");
  const double top = *std::max_element(row.begin(), row.end());
  double num = 0.0, den = 0.0;
  for (double x : row) {
    const double w = std::exp(omega * (x - top));
    num += x * w;
    den += w;
  }
  return num / den;
}

double aggregate(std::span<const double> row, const OperatorSpec& op) {
  switch (op.kind) {
    case OperatorKind::HardMax: return hard_max(row);
    case OperatorKind::MellowMax: return mellowmax(row, op.omega);
    case OperatorKind::BoltzmannSoftmax: return boltzmann_softmax(row, op.omega);
  }
  return hard_max(row);
}

QTable residual(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op) {
  QTable out = apply_bellman(mdp, q, op);
  auto o = out.flat();
  const auto in = q.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= in[i];
  return out;
}

std::vector<std::size_t> greedy_policy(const QTable& q) {
  std::vector<std::size_t> policy(q.n_states(), 0);
  for (std::size_t s = 0; s < q.n_states(); ++s) {
    const auto row = q.row(s);
    // max_element returns the first maximum
    policy[s] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return policy;
}

}  // namespace anderson_pi
