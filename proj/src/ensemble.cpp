#include <algorithm>
#include <cmath>
#include <map>

#include <omp.h>

#include "anderson_pi/errors.hpp"
#include "anderson_pi/solver.hpp"

namespace anderson_pi {

namespace {

bool contractive(const OperatorSpec& op) { return op.kind != OperatorKind::BoltzmannSoftmax; }

struct OracleKey {
  std::size_t mdp;
  OperatorKind kind;
  double omega;
  auto operator<=>(const OracleKey&) const = default;
};

RunSummary summarize(const SolverTrace& t) {
  RunSummary r;
  r.converged = t.converged;
  r.iterations = t.iterations;
  r.final_residual = t.records.empty() ? 0.0 : t.records.back().residual_inf;
  std::size_t steps = 0;
  for (const auto& rec : t.records) {
    r.residuals.push_back(rec.residual_inf);
    if (!rec.has_step) continue;
    ++steps;
    r.theta_mean += rec.theta;
    r.theta_max = std::max(r.theta_max, rec.theta);
    r.jitter_count += rec.jitter_flag ? 1 : 0;
    r.safeguard_count += rec.safeguard_restart ? 1 : 0;
  }
  if (steps) r.theta_mean /= static_cast<double>(steps);
  return r;
}

}  // namespace

EnsembleReport run_ensemble(const std::vector<NamedConfig>& configs,
                            const std::vector<EnsembleMdp>& mdps, int jobs) {
  if (configs.empty() || mdps.empty()) {
    throw ParameterError("run_ensemble: configs and mdps must be nonempty");
  }
  jobs = std::max(jobs, 1);

  // Reference fixed points, one per (mdp, operator).
  std::vector<OracleKey> keys;
  for (std::size_t i = 0; i < mdps.size(); ++i)
    for (const auto& c : configs) {
      if (!contractive(c.config.op)) continue;
      const double omega = c.config.op.kind == OperatorKind::HardMax ? 0.0 : c.config.op.omega;
      OracleKey key{i, c.config.op.kind, omega};
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
  std::vector<std::optional<QTable>> oracles(keys.size());
  const long n_keys = static_cast<long>(keys.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (long i = 0; i < n_keys; ++i) {
    const auto& key = keys[static_cast<std::size_t>(i)];
    try {
      oracles[static_cast<std::size_t>(i)] =
          fixed_point_oracle(mdps[key.mdp].mdp, OperatorSpec{key.kind, key.omega});
    } catch (const std::exception&) {
      // left empty: error vs oracle is reported as unavailable
    }
  }
  std::map<OracleKey, std::size_t> oracle_index;
  for (std::size_t i = 0; i < keys.size(); ++i) oracle_index[keys[i]] = i;

  EnsembleReport report;
  report.runs.resize(configs.size() * mdps.size());
  const long n_runs = static_cast<long>(report.runs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (long idx = 0; idx < n_runs; ++idx) {
    const std::size_t ci = static_cast<std::size_t>(idx) / mdps.size();
    const std::size_t mi = static_cast<std::size_t>(idx) % mdps.size();
    const auto& nc = configs[ci];
    const auto& em = mdps[mi];
    RunSummary r;
    try {
      const auto trace = run(em.mdp, nc.config);
      r = summarize(trace);
      if (contractive(nc.config.op)) {
        const double omega = nc.config.op.kind == OperatorKind::HardMax ? 0.0 : nc.config.op.omega;
        const auto& oracle = oracles[oracle_index.at({mi, nc.config.op.kind, omega})];
        if (oracle) r.final_error_vs_oracle = max_abs_difference(trace.final_q, *oracle);
      }
    } catch (const DivergenceError& e) {
      r = summarize(e.trace());
      r.converged = false;
      r.failed = true;
      r.failure = e.what();
    } catch (const std::exception& e) {
      r.failed = true;
      r.failure = e.what();
    }
    r.config_index = ci;
    r.mdp_index = mi;
    r.config_name = nc.name;
    try {
      r.config_hash = config_hash(nc.config);
    } catch (const std::exception&) {
      r.config_hash = "invalid";
    }
    r.mdp_label = em.label;
    r.mdp_seed = em.seed;
    report.runs[static_cast<std::size_t>(idx)] = std::move(r);
  }

  // aggregation after all workers finish
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    ConfigAggregate agg;
    agg.name = configs[ci].name;
    agg.config_hash = report.runs[ci * mdps.size()].config_hash;
    std::vector<std::size_t> converged_counts;
    std::size_t theta_runs = 0;
    for (std::size_t mi = 0; mi < mdps.size(); ++mi) {
      const auto& r = report.runs[ci * mdps.size() + mi];
      ++agg.runs;
      agg.failed += r.failed ? 1 : 0;
      agg.jitter_count += r.jitter_count;
      agg.safeguard_count += r.safeguard_count;
      if (!r.failed) {
        agg.theta_mean += r.theta_mean;
        ++theta_runs;
      }
      agg.iteration_counts.push_back(r.converged ? r.iterations : 0);
      if (r.converged) {
        ++agg.converged;
        converged_counts.push_back(r.iterations);
        if (r.final_error_vs_oracle) {
          agg.max_error_vs_oracle =
              std::max(agg.max_error_vs_oracle.value_or(0.0), *r.final_error_vs_oracle);
        }
      }
      const auto& base = report.runs[mi];
      if (ci > 0 && r.converged && (!base.converged || r.iterations < base.iterations)) {
        agg.win_rate += 1.0;
      }
    }
    agg.win_rate /= static_cast<double>(mdps.size());
    if (theta_runs) agg.theta_mean /= static_cast<double>(theta_runs);
    if (!converged_counts.empty()) {
      std::sort(converged_counts.begin(), converged_counts.end());
      double total = 0.0;
      for (auto c : converged_counts) total += static_cast<double>(c);
      agg.mean_iterations = total / static_cast<double>(converged_counts.size());
      const std::size_t n = converged_counts.size();
      agg.median_iterations = n % 2 ? static_cast<double>(converged_counts[n / 2])
                                    : 0.5 * static_cast<double>(converged_counts[n / 2 - 1] +
                                                                converged_counts[n / 2]);
      agg.min_iterations = converged_counts.front();
      agg.max_iterations = converged_counts.back();
    }
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

}  // namespace anderson_pi
