#include <algorithm>
#include <cmath>

#include "anderson_pi/diagnostics.hpp"

namespace anderson_pi::diagnostics {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

SolverTrace run_keep_trace(const TabularMdp& mdp, const SolverConfig& cfg) {
  try {
    return run(mdp, cfg);
  } catch (const DivergenceError& e) {
    return e.trace();
  }
}

void append(std::vector<BoundCheckRecord>& out, std::vector<BoundCheckRecord> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace

AndersonHistory random_history(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  AndersonHistory h(p);
  std::vector<double> q(n), tq(n);
  for (std::size_t i = 0; i <= p; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q[j] = uniform(rng, -1.0, 1.0);
      tq[j] = uniform(rng, -1.0, 1.0);
    }
    h.push(q, tq);
  }
  return h;
}

double form_equivalence_gap(const TabularMdp& mdp, SolverConfig cfg, std::size_t iterations) {
  cfg.tol = 1e-300;
  double gap = 0.0;
  for (std::size_t k = 1; k <= iterations; ++k) {
    cfg.max_iter = k;
    cfg.form = UpdateForm::Mixing;
    const SolverTrace a = run(mdp, cfg);
    cfg.form = UpdateForm::QuasiNewton;
    const SolverTrace b = run(mdp, cfg);
    gap = std::max(gap, max_abs_difference(a.final_q, b.final_q));
  }
  return gap;
}

std::vector<BoundCheckRecord> run_check_suite(const SuiteOptions& opt) {
  std::vector<BoundCheckRecord> out;
  const TabularMdp rnd = generate_random_mdp(opt.seed, 12, 3, 3, 1.0, 0.9);
  const TabularMdp grid = generate_gridworld(4, 4, 0.1, 1.0, 0.9);

  const OperatorSpec ops[] = {{OperatorKind::HardMax, 0.0},
                              {OperatorKind::MellowMax, 1.0},
                              {OperatorKind::MellowMax, 5.0},
                              {OperatorKind::MellowMax, 10.0},
                              {OperatorKind::BoltzmannSoftmax, 5.0}};
  for (std::size_t i = 0; i < std::size(ops); ++i) {
    append(out, check_contraction(rnd, ops[i], opt.pairs, opt.seed * 31 + i));
  }

  // Trajectory bounds: theta on every step, Prop2_1 and Theorem3 on stable-aa.
  SolverConfig base;
  base.depth = 3;
  base.beta = opt.beta;
  base.max_iter = 300;
  base.diagnostics = DiagnosticsLevel::Full;
  for (const TabularMdp* mdp : {&rnd, &grid}) {
    for (Scheme s : {Scheme::AndersonKKT, Scheme::AndersonUnconstrained, Scheme::StableAA}) {
      SolverConfig c = base;
      c.scheme = s;
      c.eta = s == Scheme::StableAA ? opt.eta : 0.0;
      append(out, check_trace_bounds(run_keep_trace(*mdp, c)));
    }
  }

  for (Scheme s : {Scheme::AndersonKKT, Scheme::AndersonUnconstrained, Scheme::StableAA}) {
    SolverConfig c = base;
    c.scheme = s;
    c.eta = s == Scheme::StableAA ? opt.eta : 0.0;
    c.diagnostics = DiagnosticsLevel::Basic;
    out.push_back(make_record(BoundId::FormEquiv, form_equivalence_gap(rnd, c, 20),
                              kFormEquivTolerance, 0.0, true, 20, config_hash(c.normalized()),
                              to_string(s)));
  }

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i < opt.histories; ++i) {
    const std::size_t p = 1 + i % 5;
    const auto hm = build_history_matrices(random_history(rng, 20, p));
    const auto it = static_cast<std::int64_t>(i);
    const MixingSolution kkt = solve_alpha_kkt(hm);
    const MixingSolution non = solve_tau_unconstrained(hm);
    const MixingSolution reg0 = solve_tau_regularized(hm, 0.0);
    const MixingSolution reg = solve_tau_regularized(hm, opt.eta);

    out.push_back(make_record(BoundId::SolverEquiv, max_abs_diff(kkt.alpha, non.alpha),
                              kSolverEquivTolerance, 0.0, true, it, {}, "kkt-vs-unconstrained"));
    out.push_back(make_record(BoundId::SolverEquiv, max_abs_diff(reg0.alpha, non.alpha), 1e-10,
                              0.0, true, it, {}, "eta0-vs-unconstrained"));
    const auto tau_back = alpha_to_tau(tau_to_alpha(non.tau));
    const auto alpha_back = tau_to_alpha(alpha_to_tau(kkt.alpha));
    out.push_back(make_record(BoundId::SolverEquiv,
                              std::max(max_abs_diff(tau_back, non.tau),
                                       max_abs_diff(alpha_back, kkt.alpha)),
                              1e-14, 0.0, true, it, {}, "round-trip"));
    out.push_back(make_record(BoundId::Theta01, kkt.gain_theta_l2, 1.0, kThetaSlack, true, it, {},
                              "l2 history"));
    auto p2 = check_prop2(reg, non, hm.newest_residual(), opt.eta, p);
    for (auto& r : p2) r.iter = it;
    append(out, std::move(p2));
  }
  return out;
}

}  // namespace anderson_pi::diagnostics
