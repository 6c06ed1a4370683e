// Bellman operator kernels. The OpenMP version parallelizes over states for the
// aggregation pass and over (state, action) pairs for the expectation pass;
// every output entry is produced by one thread with the same summation order as
// the serial reference, so the two agree bitwise.

#include <vector>

#include "anderson_pi/errors.hpp"
#include "anderson_pi/operators.hpp"

namespace anderson_pi {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_shapes(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op) {
  if (q.n_states() != mdp.n_states() || q.n_actions() != mdp.n_actions()) {
    throw ParameterError("apply_bellman: Q-table dimensions do not match the MDP");
  }
  op.check();
}

double expected_backup(const TabularMdp& mdp, const std::vector<double>& agg, std::size_t s,
                       std::size_t a) {
  const auto row = mdp.row(s, a);
  double acc = 0.0;
  for (std::size_t t = 0; t < row.size(); ++t) acc += row[t] * agg[t];
  return mdp.reward(s, a) + mdp.gamma() * acc;
}

}  // namespace

QTable apply_bellman_serial(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op) {
  check_shapes(mdp, q, op);
  const std::size_t nS = mdp.n_states(), nA = mdp.n_actions();
  std::vector<double> agg(nS);
  for (std::size_t s = 0; s < nS; ++s) agg[s] = aggregate(q.row(s), op);
  QTable out(nS, nA);
  for (std::size_t s = 0; s < nS; ++s) {
    for (std::size_t a = 0; a < nA; ++a) out(s, a) = expected_backup(mdp, agg, s, a);
  }
  return out;
}

QTable apply_bellman(const TabularMdp& mdp, const QTable& q, const OperatorSpec& op) {
  check_shapes(mdp, q, op);
  const long nS = static_cast<long>(mdp.n_states());
  const long nA = static_cast<long>(mdp.n_actions());
  const bool parallel = mdp.n_pairs() * mdp.n_states() >= kParallelWork;

  std::vector<double> agg(static_cast<std::size_t>(nS));
#pragma omp parallel for schedule(static) if (parallel)
  for (long s = 0; s < nS; ++s) {
    agg[static_cast<std::size_t>(s)] = aggregate(q.row(static_cast<std::size_t>(s)), op);
  }

  QTable out(mdp.n_states(), mdp.n_actions());
  auto flat = out.flat();
#pragma omp parallel for schedule(static) if (parallel)
  for (long i = 0; i < nS * nA; ++i) {
    const auto s = static_cast<std::size_t>(i / nA);
    const auto a = static_cast<std::size_t>(i % nA);
    flat[static_cast<std::size_t>(i)] = expected_backup(mdp, agg, s, a);
  }
  return out;
}

}  // namespace anderson_pi
