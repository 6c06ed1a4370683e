#include "anderson_pi/diagnostics.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "anderson_pi/linalg.hpp"

namespace anderson_pi::diagnostics {

std::string to_string(BoundId id) {
  switch (id) {
    case BoundId::Theta01: return "Theta01";
    case BoundId::Contraction: return "Contraction";
    case BoundId::Theorem3: return "Theorem3";
    case BoundId::Prop2_1: return "Prop2_1";
    case BoundId::Prop2_2: return "Prop2_2";
    case BoundId::FormEquiv: return "FormEquiv";
    case BoundId::SolverEquiv: return "SolverEquiv";
  }
  return "?";
}

BoundCheckRecord make_record(BoundId id, double lhs, double rhs, double slack, bool asserted,
                             std::int64_t iter, std::string config_hash, std::string detail) {
  BoundCheckRecord r;
  r.bound_id = id;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = slack;
  r.satisfied = lhs <= rhs + slack;  // false for NaN
  r.asserted = asserted;
  r.iter = iter;
  r.config_hash = std::move(config_hash);
  r.detail = std::move(detail);
  return r;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

std::vector<BoundCheckRecord> check_contraction(const TabularMdp& mdp, const OperatorSpec& op,
                                                std::size_t n_pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const bool asserted = op.kind != OperatorKind::BoltzmannSoftmax;
  const std::string detail = to_string(op.kind) +
                             (op.kind == OperatorKind::HardMax ? "" : " omega=" + std::to_string(op.omega));
  std::vector<BoundCheckRecord> out;
  out.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    QTable a(mdp.n_states(), mdp.n_actions()), b(mdp.n_states(), mdp.n_actions());
    for (double& v : a.flat()) v = uniform(rng, -10.0, 10.0);
    if (i % 2 == 0) {
      for (double& v : b.flat()) v = uniform(rng, -10.0, 10.0);
    } else {
      const double scale = std::pow(10.0, uniform(rng, -3.0, 0.0));
      for (std::size_t j = 0; j < a.size(); ++j) {
        b.flat()[j] = std::clamp(a.flat()[j] + scale * uniform(rng, -1.0, 1.0), -10.0, 10.0);
      }
    }
    const QTable ta = apply_bellman(mdp, a, op);
    const QTable tb = apply_bellman(mdp, b, op);
    out.push_back(make_record(BoundId::Contraction, max_abs_difference(ta, tb),
                              mdp.gamma() * max_abs_difference(a, b), kContractionSlack, asserted,
                              static_cast<std::int64_t>(i), {}, detail));
  }
  return out;
}

std::vector<BoundCheckRecord> check_theorem3(const SolverTrace& trace, double eta, double beta) {
  std::vector<BoundCheckRecord> out;
  const std::string hash = config_hash(trace.config);
  const double rhs = std::abs(2.0 / eta - beta);
  const bool asserted = rhs >= beta;
  for (const auto& r : trace.records) {
    if (!r.theorem3_lhs) continue;
    const auto k = static_cast<std::int64_t>(r.k);
    out.push_back(make_record(BoundId::Theorem3, *r.theorem3_lhs, rhs, kTheorem3Slack, asserted, k,
                              hash, asserted ? "norm" : "norm; rhs < beta, report-only"));
    if (r.theorem3_inverse_ratio) {
      auto rec = make_record(BoundId::Theorem3, *r.theorem3_inverse_ratio, 1.0, 0.0, false, k,
                             hash, "inverse_ratio");
      rec.satisfied = *r.theorem3_inverse_ratio < 1.0;
      out.push_back(std::move(rec));
    } else if (!r.theorem3_inverse_note.empty()) {
      out.push_back(make_record(BoundId::Theorem3, std::nan(""), 1.0, 0.0, false, k, hash,
                                "inverse_ratio " + r.theorem3_inverse_note));
    }
  }
  return out;
}

std::vector<BoundCheckRecord> check_prop2(const MixingSolution& reg, const MixingSolution& non,
                                          std::span<const double> e_k, double eta,
                                          std::size_t m) {
  const double en = linalg::norm2(e_k);
  const double an = linalg::norm2(reg.alpha);
  std::vector<BoundCheckRecord> out;
  out.push_back(make_record(BoundId::Prop2_1, an * an, 4.0 * (1.0 + en * en / (eta * eta)),
                            kProp2Slack, true));

  double diff = 0.0;
  for (std::size_t i = 0; i < reg.alpha.size(); ++i) {
    diff += (reg.alpha[i] - non.alpha[i]) * (reg.alpha[i] - non.alpha[i]);
  }
  const double cond = linalg::spectral_norm(transform_matrix(m)) *
                      linalg::spectral_norm(transform_matrix_inverse(m));
  const double nn = linalg::norm2(non.alpha);
  const double md = static_cast<double>(m);
  out.push_back(make_record(BoundId::Prop2_2, diff,
                            cond * cond * nn * nn - (2.0 * md + 1.0) / (md + 1.0), 0.0, false));
  return out;
}

std::vector<BoundCheckRecord> check_trace_bounds(const SolverTrace& trace) {
  std::vector<BoundCheckRecord> out;
  const std::string hash = config_hash(trace.config);
  const double sqrt_n = std::sqrt(static_cast<double>(trace.final_q.size()));
  for (const auto& r : trace.records) {
    if (!r.has_step) continue;
    const auto k = static_cast<std::int64_t>(r.k);
    out.push_back(make_record(BoundId::Theta01, r.theta_l2, 1.0, kThetaSlack, true, k, hash, "l2"));
    out.push_back(make_record(BoundId::Theta01, -r.theta, 0.0, kThetaSlack, true, k, hash,
                              "nonnegative"));
    out.push_back(
        make_record(BoundId::Theta01, r.theta, sqrt_n, kThetaSlack, true, k, hash, "inf"));
    if (r.prop2_bound1_lhs) {
      out.push_back(make_record(BoundId::Prop2_1, *r.prop2_bound1_lhs, *r.prop2_bound1_rhs,
                                kProp2Slack, true, k, hash));
      out.push_back(make_record(BoundId::Prop2_2, *r.prop2_bound2_lhs, *r.prop2_bound2_rhs, 0.0,
                                false, k, hash));
    }
    if (r.form_discrepancy) {
      out.push_back(make_record(BoundId::FormEquiv, *r.form_discrepancy, kFormEquivTolerance, 0.0,
                                false, k, hash, "full-run"));
    }
  }
  if (trace.config.scheme == Scheme::StableAA) {
    auto t3 = check_theorem3(trace, trace.config.eta, trace.config.mixing_beta());
    out.insert(out.end(), t3.begin(), t3.end());
  }
  return out;
}

RateReport empirical_rate(const SolverTrace& trace, double gamma) {
  RateReport rep;
  rep.gamma = gamma;
  rep.records = trace.records.size();
  if (trace.records.size() < 3) return rep;

  const std::size_t last = trace.records.size() - 1;
  const std::size_t first = std::max<std::size_t>(1, (last + 1) / 2);
  double log_sum = 0.0;
  std::size_t ratios = 0;
  for (std::size_t k = first; k <= last; ++k) {
    const double prev = trace.records[k - 1].residual_inf;
    const double cur = trace.records[k].residual_inf;
    if (!(prev > 0.0) || !(cur > 0.0)) continue;
    log_sum += std::log(cur / prev);
    ++ratios;
  }
  if (ratios == 0) return rep;
  rep.sufficient = true;
  rep.fitted_ratio = std::exp(log_sum / static_cast<double>(ratios));
  rep.faster_than_gamma = rep.fitted_ratio < gamma;

  std::size_t steps = 0;
  rep.min_abs_alpha = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    if (!r.has_step) continue;
    rep.mean_theta += r.theta;
    ++steps;
    if (r.alpha.size() > 1) rep.min_abs_alpha = std::min(rep.min_abs_alpha, r.min_abs_alpha);
  }
  if (steps) rep.mean_theta /= static_cast<double>(steps);
  if (!std::isfinite(rep.min_abs_alpha)) rep.min_abs_alpha = 1.0;  // no mixing step taken
  rep.coefficient_flag = rep.min_abs_alpha < 1e-6;
  return rep;
}

std::vector<RateReport> empirical_rate_report(const std::vector<SolverTrace>& traces,
                                              double gamma) {
  std::vector<RateReport> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(empirical_rate(t, gamma));
  return out;
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string to_json_line(const BoundCheckRecord& r) {
  nlohmann::ordered_json j;
  j["bound_id"] = to_string(r.bound_id);
  j["lhs"] = number_or_null(r.lhs);
  j["rhs"] = number_or_null(r.rhs);
  j["satisfied"] = r.satisfied;
  j["slack"] = r.slack;
  j["iter"] = r.iter;
  j["config_hash"] = r.config_hash;
  j["asserted"] = r.asserted;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j.dump();
}

std::string report_header_json() {
  nlohmann::ordered_json j;
  j["report"] = "bound-checks";
  j["asserted"] = {"Theta01", "Contraction (max, mellowmax)", "Prop2_1", "FormEquiv",
                   "SolverEquiv", "Theorem3 (norm, when |2/eta - beta| >= beta)"};
  j["report_only"] = {"Theorem3 (norm, when |2/eta - beta| < beta)", "Theorem3 inverse_ratio",
                      "Prop2_2", "Contraction (softmax)"};
  return j.dump();
}

bool all_asserted_hold(const std::vector<BoundCheckRecord>& records) {
  for (const auto& r : records)
    if (r.asserted && !r.satisfied) return false;
  return true;
}

}  // namespace anderson_pi::diagnostics
