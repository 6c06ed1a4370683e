#include "anderson_pi/solver.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "anderson_pi/anderson.hpp"
#include "anderson_pi/errors.hpp"
#include "anderson_pi/trace_io.hpp"

namespace anderson_pi {

using linalg::norm2;
using linalg::norm_inf;

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::VanillaVI: return "vanilla";
    case Scheme::AndersonKKT: return "kkt";
    case Scheme::AndersonUnconstrained: return "unconstrained";
    case Scheme::StableAA: return "stable-aa";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "vanilla" || name == "vi") return Scheme::VanillaVI;
  if (name == "kkt" || name == "aa") return Scheme::AndersonKKT;
  if (name == "unconstrained") return Scheme::AndersonUnconstrained;
  if (name == "stable-aa" || name == "stable") return Scheme::StableAA;
  throw ParameterError("unknown scheme '" + name +
                       "' (expected vanilla, kkt, unconstrained, stable-aa)");
}

SolverConfig SolverConfig::normalized() const {
  SolverConfig c = *this;
  switch (c.scheme) {
    case Scheme::VanillaVI:
      c.depth = 0;
      c.eta = 0.0;
      break;
    case Scheme::AndersonKKT:
    case Scheme::AndersonUnconstrained:
      c.eta = 0.0;
      break;
    case Scheme::StableAA:
      if (!(c.eta > 0.0) || !std::isfinite(c.eta)) {
        throw ParameterError("stable-aa requires eta > 0");
      }
      break;
  }
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ParameterError("beta must lie in [0,1]");
  if (!(c.tol > 0.0)) throw ParameterError("tol must be positive");
  if (c.max_iter == 0) throw ParameterError("max_iter must be positive");
  if (!(c.safeguard_ratio > 0.0)) throw ParameterError("safeguard ratio must be positive");
  c.op.check();
  return c;
}

std::string describe(const SolverConfig& cfg) {
  std::ostringstream os;
  os << "scheme=" << to_string(cfg.scheme) << ";m=" << cfg.depth
     << ";beta=" << format_real(cfg.beta)
     << ";conv=" << (cfg.beta_convention == BetaConvention::Eq2 ? "eq2" : "eq13")
     << ";eta=" << format_real(cfg.eta) << ";op=" << to_string(cfg.op.kind)
     << ";omega=" << format_real(cfg.op.kind == OperatorKind::HardMax ? 0.0 : cfg.op.omega)
     << ";tol=" << format_real(cfg.tol) << ";max_iter=" << cfg.max_iter << ";seed=" << cfg.seed
     << ";safeguard=" << (cfg.safeguard ? 1 : 0)
     << ";form=" << (cfg.form == UpdateForm::Mixing ? "mixing" : "quasi-newton");
  return os.str();
}

std::string config_hash(const SolverConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : describe(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double max_abs_difference(const QTable& a, const QTable& b) {
  if (a.size() != b.size()) throw ParameterError("max_abs_difference: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.flat()[i] - b.flat()[i]));
  }
  return m;
}

namespace {

double min_abs(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, std::abs(x));
  return v.empty() ? 0.0 : m;
}

bool diverging(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceThreshold) return true;
  }
  return false;
}

// cond_2 of the tau -> alpha transform for each window size, computed once.
double transform_condition(std::size_t p) {
  static const std::map<std::size_t, double> cache = [] {
    std::map<std::size_t, double> c;
    for (std::size_t q = 0; q <= 64; ++q) {
      c[q] = linalg::spectral_norm(transform_matrix(q)) *
             linalg::spectral_norm(transform_matrix_inverse(q));
    }
    return c;
  }();
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  return linalg::spectral_norm(transform_matrix(p)) *
         linalg::spectral_norm(transform_matrix_inverse(p));
}

void record_theorem3(IterationRecord& rec, const HistoryMatrices& m, const MixingSolution& sol,
                     double beta, double eta) {
  const auto g_tilde = materialize_update_matrix(m, beta, eta, sol.jitter);
  rec.theorem3_lhs = linalg::spectral_norm(g_tilde);
  rec.theorem3_rhs = std::abs(2.0 / eta - beta);

  // ||G~^{-1} G||_2 needs the unregularized G, i.e. H^T H invertible without jitter.
  const auto hth = linalg::gram(m.delta_e);
  try {
    auto probe = linalg::solve_spd(hth, std::vector<double>(hth.rows(), 1.0));
    if (probe.jitter != 0.0) {
      rec.theorem3_inverse_note = "skipped: H^T H singular at jitter 0";
      return;
    }
  } catch (const SingularSystemError&) {
    rec.theorem3_inverse_note = "skipped: H^T H singular at jitter 0";
    return;
  }
  const auto g = materialize_update_matrix(m, beta, 0.0, 0.0);
  DenseMatrix ratio;
  if (!linalg::solve_general(g_tilde, g, ratio)) {
    rec.theorem3_inverse_note = "skipped: G~ singular";
    return;
  }
  rec.theorem3_inverse_ratio = linalg::spectral_norm(ratio);
}

}  // namespace

SolverTrace run(const TabularMdp& mdp, const SolverConfig& config) {
  const SolverConfig cfg = config.normalized();
  SolverTrace trace;
  trace.config = cfg;

  QTable q = cfg.initial_q ? *cfg.initial_q : QTable::zeros_like(mdp);
  if (q.n_states() != mdp.n_states() || q.n_actions() != mdp.n_actions()) {
    throw ParameterError("run: initial Q-table dimensions do not match the MDP");
  }
  AndersonHistory history(cfg.depth);
  const double beta = cfg.mixing_beta();
  const bool full = cfg.diagnostics == DiagnosticsLevel::Full;
  double previous_residual = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0;; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const QTable tq = apply_bellman(mdp, q, cfg.op);
    std::vector<double> e(q.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = tq.flat()[i] - q.flat()[i];

    IterationRecord rec;
    rec.k = k;
    rec.residual_inf = norm_inf(e);
    rec.residual_l2 = norm2(e);
    rec.beta_used = beta;

    if (diverging(q.flat()) || diverging(tq.flat())) {
      trace.records.push_back(std::move(rec));
      trace.diverged = true;
      trace.iterations = k;
      trace.final_q = q;
      std::ostringstream os;
      os << "divergence at iteration " << k << ": iterate non-finite or above "
         << kDivergenceThreshold;
      throw DivergenceError(os.str(), std::move(trace));
    }
    if (rec.residual_inf <= cfg.tol || k == cfg.max_iter) {
      trace.converged = rec.residual_inf <= cfg.tol;
      trace.iterations = k;
      trace.records.push_back(std::move(rec));
      break;
    }

    bool restart = false;
    if (cfg.safeguard && rec.residual_inf > cfg.safeguard_ratio * previous_residual) {
      history.clear();
      restart = true;
    }
    previous_residual = rec.residual_inf;
    history.push(q.flat(), tq.flat());
    const auto m = build_history_matrices(history);

    MixingSolution sol;
    if (restart || m.p() == 0) {
      sol.alpha = {1.0};
      sol.solver_kind = SolverKind::Vanilla;
      sol.gain_theta = gain_theta(m.residuals, sol.alpha);
      sol.gain_theta_l2 = gain_theta_l2(m.residuals, sol.alpha);
    } else {
      switch (cfg.scheme) {
        case Scheme::VanillaVI: sol = solve_tau_unconstrained(m); break;  // unreachable: depth 0
        case Scheme::AndersonKKT: sol = solve_alpha_kkt(m); break;
        case Scheme::AndersonUnconstrained: sol = solve_tau_unconstrained(m); break;
        case Scheme::StableAA: sol = solve_tau_regularized(m, cfg.eta); break;
      }
    }

    std::vector<double> next;
    if (cfg.form == UpdateForm::QuasiNewton && sol.solver_kind != SolverKind::Vanilla) {
      next = quasi_newton_update(history, beta, cfg.eta).next;
    } else {
      next = mixed_update(history, sol, beta);
    }

    rec.has_step = true;
    rec.theta = sol.gain_theta;
    rec.theta_l2 = sol.gain_theta_l2;
    rec.alpha = sol.alpha;
    rec.jitter = sol.jitter;
    rec.fallback = sol.fallback;
    rec.jitter_flag = sol.jitter > 0.0 || sol.fallback || sol.refined;
    rec.safeguard_restart = restart;
    rec.min_abs_alpha = min_abs(sol.alpha);

    if (sol.solver_kind == SolverKind::Regularized) {
      const auto ek = m.newest_residual();
      const double en = norm2(ek);
      const double an = norm2(sol.alpha);
      rec.prop2_bound1_lhs = an * an;
      rec.prop2_bound1_rhs = 4.0 * (1.0 + en * en / (cfg.eta * cfg.eta));
      const auto non = solve_tau_unconstrained(m);
      double diff = 0.0;
      for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        diff += (sol.alpha[i] - non.alpha[i]) * (sol.alpha[i] - non.alpha[i]);
      }
      const double cond = transform_condition(m.p());
      const double nn = norm2(non.alpha);
      const double mp = static_cast<double>(m.p());
      rec.prop2_bound2_lhs = diff;
      rec.prop2_bound2_rhs = cond * cond * nn * nn - (2.0 * mp + 1.0) / (mp + 1.0);
      if (full) record_theorem3(rec, m, sol, beta, cfg.eta);
    }
    if (full && sol.solver_kind != SolverKind::Vanilla) {
      const auto other = cfg.form == UpdateForm::Mixing
                             ? quasi_newton_update(history, beta, cfg.eta).next
                             : mixed_update(history, sol, beta);
      double d = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i) d = std::max(d, std::abs(next[i] - other[i]));
      rec.form_discrepancy = d;
    }

    if (cfg.record_timing) {
      rec.wall_nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    }
    trace.records.push_back(std::move(rec));
    q = QTable(q.n_states(), q.n_actions(), std::move(next));
  }
  trace.final_q = std::move(q);
  return trace;
}

QTable fixed_point_oracle(const TabularMdp& mdp, const OperatorSpec& op, double tol,
                          std::size_t max_iter) {
  QTable q = QTable::zeros_like(mdp);
  double res = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= max_iter; ++k) {
    QTable tq = apply_bellman(mdp, q, op);
    res = max_abs_difference(tq, q);
    if (res <= tol) return q;
    if (!std::isfinite(res)) break;
    q = std::move(tq);
  }
  std::ostringstream os;
  os << "fixed_point_oracle: residual " << res << " above " << tol << " after " << max_iter
     << " iterations";
  throw OraclePrecisionError(os.str(), res);
}

}  // namespace anderson_pi
