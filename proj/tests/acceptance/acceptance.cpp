// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "anderson_pi/diagnostics.hpp"
#include "anderson_pi/solver.hpp"
#include "cli.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace anderson_pi;
namespace fs = std::filesystem;
namespace dg = anderson_pi::diagnostics;

namespace {

int failures = 0;

struct Deferred {
  bool ok = false;
  std::string detail;
};
Deferred criterion8;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolverConfig scheme(Scheme s, std::size_t m, double eta, OperatorSpec op) {
  SolverConfig c;
  c.scheme = s;
  c.depth = m;
  c.eta = eta;
  c.op = op;
  return c;
}

std::vector<EnsembleMdp> random_ensemble() {
  std::vector<EnsembleMdp> out;
  for (int s = 1; s <= 50; ++s) {
    out.push_back({"random-" + std::to_string(s), s, generate_random_mdp(s, 30, 4, 3, 1.0, 0.95)});
  }
  return out;
}

std::vector<EnsembleMdp> grid_ensemble() {
  const std::pair<std::size_t, std::size_t> sizes[] = {{3, 3}, {4, 4}, {5, 5}, {6, 4}, {8, 8}};
  std::vector<EnsembleMdp> out;
  for (auto [w, h] : sizes) {
    out.push_back({"grid-" + std::to_string(w) + "x" + std::to_string(h), -1,
                   generate_gridworld(w, h, 0.1, 1.0, 0.95)});
  }
  return out;
}

std::vector<NamedConfig> ensemble_configs() {
  std::vector<NamedConfig> out;
  for (auto op : {OperatorSpec::hard_max(), OperatorSpec::mellowmax(5)}) {
    const std::string tag = op.kind == OperatorKind::HardMax ? "max" : "mm5";
    out.push_back({"vanilla/" + tag, scheme(Scheme::VanillaVI, 0, 0.0, op)});
    out.push_back({"kkt5/" + tag, scheme(Scheme::AndersonKKT, 5, 0.0, op)});
    out.push_back({"unconstrained5/" + tag, scheme(Scheme::AndersonUnconstrained, 5, 0.0, op)});
    out.push_back({"stable5-eta0.1/" + tag, scheme(Scheme::StableAA, 5, 0.1, op)});
  }
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void criteria_1_2(const std::vector<EnsembleMdp>& mdps) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto configs = ensemble_configs();
  const auto rep = run_ensemble(configs, mdps, 1);
  const double elapsed = seconds_since(t0);

  std::size_t converged = 0, within = 0, failed = 0, no_oracle = 0;
  double worst = 0.0;
  for (const auto& r : rep.runs) {
    failed += r.failed ? 1 : 0;
    if (!r.converged) continue;
    ++converged;
    if (!r.final_error_vs_oracle) {
      ++no_oracle;
      continue;
    }
    worst = std::max(worst, *r.final_error_vs_oracle);
    within += *r.final_error_vs_oracle <= 1e-8 ? 1 : 0;
  }
  report(1, "fixed-point correctness", within == converged && no_oracle == 0 && elapsed < 60.0,
         fmt("%zu/%zu converged runs within 1e-8 of the oracle (max error %.3g), %zu of %zu runs "
             "converged, %zu failed, %.1f s (budget 60 s)",
             within, converged, worst, converged, rep.runs.size(), failed, elapsed));

  std::size_t steps = 0, violations = 0;
  double worst_excess = -1e300;
  for (const auto& r : rep.runs) {
    if (configs[r.config_index].config.scheme != Scheme::VanillaVI) continue;
    const double gamma = mdps[r.mdp_index].mdp.gamma();
    for (std::size_t k = 1; k < r.residuals.size(); ++k) {
      ++steps;
      const double excess = r.residuals[k] - gamma * r.residuals[k - 1];
      worst_excess = std::max(worst_excess, excess);
      violations += excess > 1e-12 ? 1 : 0;
    }
  }
  report(2, "gamma-linear vanilla rate", violations == 0 && steps > 0,
         fmt("%zu/%zu vanilla steps satisfy ||e_k|| <= gamma ||e_k-1|| + 1e-12 (max excess %.3g)",
             steps - violations, steps, worst_excess));
}

void criterion_3(const std::vector<EnsembleMdp>& mdps) {
  const auto mm = OperatorSpec::mellowmax(5);
  const auto rep = run_ensemble({{"vanilla", scheme(Scheme::VanillaVI, 0, 0.0, mm)},
                                 {"kkt5", scheme(Scheme::AndersonKKT, 5, 0.0, mm)}},
                                mdps, 1);
  const auto& v = rep.aggregates[0];
  const auto& k = rep.aggregates[1];
  auto dist = [](const ConfigAggregate& a) {
    return fmt("mean %.1f median %.1f min %zu max %zu converged %zu/%zu", a.mean_iterations,
               a.median_iterations, a.min_iterations, a.max_iterations, a.converged, a.runs);
  };
  report(3, "acceleration (KKT m=5 vs vanilla, mellowmax 5)", k.win_rate >= 0.70,
         fmt("win rate %.3f (threshold 0.70); vanilla: %s; kkt: %s", k.win_rate, dist(v).c_str(),
             dist(k).c_str()));
  std::printf("     iteration counts vanilla:");
  for (auto n : v.iteration_counts) std::printf(" %zu", n);
  std::printf("\n     iteration counts kkt5:   ");
  for (auto n : k.iteration_counts) std::printf(" %zu", n);
  std::printf("\n");
}

void criteria_4_8(const std::vector<EnsembleMdp>& mdps) {
  std::size_t steps = 0, theta_bad = 0, prop_solves = 0, prop_bad = 0;
  double min_theta = 1e300, max_theta_l2 = 0.0, max_theta_inf = 0.0, worst_prop_ratio = 0.0;
  for (const auto& cfg : ensemble_configs()) {
    if (cfg.config.scheme == Scheme::VanillaVI) continue;
    for (const auto& em : mdps) {
      SolverTrace t;
      try {
        t = run(em.mdp, cfg.config);
      } catch (const DivergenceError& e) {
        t = e.trace();
      }
      for (const auto& r : t.records) {
        if (!r.has_step) continue;
        ++steps;
        min_theta = std::min(min_theta, r.theta);
        max_theta_l2 = std::max(max_theta_l2, r.theta_l2);
        max_theta_inf = std::max(max_theta_inf, r.theta);
        theta_bad += (r.theta < -1e-9 || r.theta_l2 > 1.0 + 1e-9) ? 1 : 0;
        if (r.prop2_bound1_lhs) {
          ++prop_solves;
          worst_prop_ratio = std::max(worst_prop_ratio, *r.prop2_bound1_lhs / *r.prop2_bound1_rhs);
          prop_bad += *r.prop2_bound1_lhs > *r.prop2_bound1_rhs + dg::kProp2Slack ? 1 : 0;
        }
      }
    }
  }
  report(4, "gain bound", theta_bad == 0 && steps > 0,
         fmt("%zu/%zu steps with theta >= -1e-9 and 2-norm theta <= 1 + 1e-9 (min theta %.3g, max "
             "2-norm theta %.12f; infinity-norm theta max %.4f, reported only)",
             steps - theta_bad, steps, min_theta, max_theta_l2, max_theta_inf));
  criterion8 = {prop_bad == 0 && prop_solves > 0,
         fmt("%zu/%zu regularized solves satisfy ||alpha||^2 <= 4(1 + ||e||^2/eta^2) + 1e-9 (max "
             "lhs/rhs %.3f)",
             prop_solves - prop_bad, prop_solves, worst_prop_ratio)};
}

void criterion_5() {
  std::mt19937_64 rng(2024);
  double worst_kkt = 0.0, worst_eta0 = 0.0, worst_round = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t p = 1 + i % 5;
    const auto m = build_history_matrices(dg::random_history(rng, 20, p));
    const auto kkt = solve_alpha_kkt(m);
    const auto non = solve_tau_unconstrained(m);
    const auto reg0 = solve_tau_regularized(m, 0.0);
    worst_kkt = std::max(worst_kkt, max_diff(kkt.alpha, non.alpha));
    worst_eta0 = std::max(worst_eta0, max_diff(reg0.alpha, non.alpha));
    worst_round = std::max(worst_round, max_diff(alpha_to_tau(tau_to_alpha(non.tau)), non.tau));
    worst_round = std::max(worst_round, max_diff(tau_to_alpha(alpha_to_tau(kkt.alpha)), kkt.alpha));
  }

  double worst_form = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto mdp = generate_random_mdp(seed, 30, 1, 3, 1.0, 0.95);  // n = 30
    for (auto [s, eta] : {std::pair{Scheme::AndersonUnconstrained, 0.0}, std::pair{Scheme::StableAA, 0.1}}) {
      auto c = scheme(s, 3, eta, OperatorSpec::mellowmax(5));
      worst_form = std::max(worst_form, dg::form_equivalence_gap(mdp, c, 20));
    }
  }
  const bool ok = worst_kkt <= 1e-8 && worst_form <= 1e-8 && worst_eta0 <= 1e-10 && worst_round <= 1e-14;
  report(5, "equivalence suite", ok,
         fmt("(a) KKT vs unconstrained alpha %.3g <= 1e-8 over 1000 histories; (b) mixing vs "
             "quasi-Newton iterates %.3g <= 1e-8 over 20-iteration runs; (c) eta=0 vs unconstrained "
             "%.3g <= 1e-10; (d) tau/alpha round trip %.3g <= 1e-14",
             worst_kkt, worst_form, worst_eta0, worst_round));
}

void criterion_6() {
  const auto mdp = generate_random_mdp(6, 30, 4, 3, 1.0, 0.95);
  std::size_t total = 0, bad = 0;
  std::string per_op;
  for (auto op : {OperatorSpec::hard_max(), OperatorSpec::mellowmax(1), OperatorSpec::mellowmax(5),
                  OperatorSpec::mellowmax(10)}) {
    const auto recs = dg::check_contraction(mdp, op, 1000, 100 + total);
    std::size_t b = 0;
    for (const auto& r : recs) b += r.satisfied ? 0 : 1;
    total += recs.size();
    bad += b;
  }
  const auto adversarial = test_support::self_loop(0.0, 0.99, 2);
  std::size_t soft_bad = 0, soft_total = 0;
  for (const auto* m : {&mdp, &adversarial}) {
    for (const auto& r : dg::check_contraction(*m, OperatorSpec::boltzmann(10), 1000, 7)) {
      ++soft_total;
      soft_bad += r.satisfied ? 0 : 1;
    }
  }
  report(6, "contraction suite", bad == 0,
         fmt("%zu/%zu pairs satisfy ||TQ - TQ'|| <= gamma ||Q - Q'|| + 1e-12 for max and mellowmax "
             "omega 1/5/10; boltzmann omega 10 (report only): %zu/%zu pairs violate",
             total - bad, total, soft_bad, soft_total));
}

void criterion_7() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  double worst_fd = 0.0, worst_sum = 0.0, min_entry = 1.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 5;
    const double w = 1.0 + (t % 10);
    std::vector<double> x(n);
    std::vector<long double> xl(n);
    for (std::size_t i = 0; i < n; ++i) xl[i] = x[i] = d(rng);
    const auto g = mellowmax_gradient(x, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto fd = oracle::central_difference(
          [w](const std::vector<long double>& v) { return oracle::mellowmax(v, w); }, xl, i, 1e-5L);
      worst_fd = std::max(worst_fd, std::abs(g[i] - static_cast<double>(fd)));
      min_entry = std::min(min_entry, g[i]);
      sum += g[i];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  report(7, "mellowmax gradient", worst_fd <= 1e-6 && min_entry >= 0.0 && worst_sum <= 1e-12,
         fmt("max |analytic - central difference| %.3g <= 1e-6 at 100 points; min entry %.3g >= 0; "
             "max |row sum - 1| %.3g <= 1e-12",
             worst_fd, min_entry, worst_sum));
}

void criterion_9() {
  std::vector<TabularMdp> small;
  for (std::uint64_t s = 1; s <= 4; ++s) small.push_back(generate_random_mdp(s, 15, 3, 3, 1.0, 0.9));
  small.push_back(generate_gridworld(4, 4, 0.1, 1.0, 0.9));

  bool ok = true;
  std::string detail;
  for (double eta : {0.1, 0.5, 1.0}) {
    std::size_t n = 0, bad = 0, asserted = 0, inverse_findings = 0;
    double worst = 0.0;
    for (const auto& m : small) {
      SolverConfig c = scheme(Scheme::StableAA, 3, eta, OperatorSpec::hard_max());
      c.diagnostics = DiagnosticsLevel::Full;
      c.max_iter = 200;
      SolverTrace t;
      try {
        t = run(m, c);
      } catch (const DivergenceError& e) {
        t = e.trace();
      }
      for (const auto& r : dg::check_theorem3(t, eta, 1.0)) {
        if (r.detail.rfind("inverse_ratio", 0) == 0) {
          inverse_findings += r.satisfied ? 0 : 1;
          continue;
        }
        ++n;
        worst = std::max(worst, r.lhs);
        asserted += r.asserted ? 1 : 0;
        if (r.asserted && !r.satisfied) ++bad;
      }
    }
    const double rhs = std::abs(2.0 / eta - 1.0);
    ok = ok && bad == 0 && n > 0;
    detail += fmt("%seta=%.1f rhs=%.3g max ||G~|| %.4f, %zu/%zu asserted steps violate",
                  detail.empty() ? "" : "; ", eta, rhs, worst, bad, asserted);
    if (inverse_findings) detail += fmt(" (inverse-ratio findings %zu, report only)", inverse_findings);
  }
  report(9, "update-matrix norm bound ||G~|| <= |2/eta - beta| (beta=1, nS <= 20)", ok, detail);
}

void criterion_10() {
  const auto root = test_support::scratch_dir("acceptance_determinism");
  auto run_all = [&](const std::string& tag) {
    const auto dir = root / tag;
    fs::create_directories(dir);
    const auto mdp = (dir / "mdp.json").string();
    std::ostringstream sink;
    auto* old_out = std::cout.rdbuf(sink.rdbuf());
    auto* old_err = std::cerr.rdbuf(sink.rdbuf());
    int codes = 0;
    codes += cli::run_cli({"gen-mdp", "--kind", "random", "--seed", "7", "--states", "20", "--actions", "3",
                           "--branching", "3", "--gamma", "0.95", "-o", mdp});
    codes += cli::run_cli({"solve", "--mdp", mdp, "--scheme", "stable-aa", "-m", "3", "--eta", "0.1", "--op",
                           "mellowmax", "--omega", "5", "--diagnostics", "full", "--oracle", "--out",
                           (dir / "solve").string()});
    codes += cli::run_cli({"compare", "--scheme", "vanilla", "--scheme", "kkt:m=5", "--scheme",
                           "stable-aa:m=5,eta=0.1", "--seeds", "1-10", "--states", "20", "--actions", "3",
                           "--jobs", "3", "--out", (dir / "compare").string()});
    codes += cli::run_cli({"check", "--seed", "1", "--pairs", "300", "--out", (dir / "check.jsonl").string()});
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return codes;
  };
  const int codes = run_all("a") + run_all("b");

  std::size_t files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto other = root / "b" / fs::relative(entry.path(), root / "a");
    if (test_support::slurp(entry.path()) != test_support::slurp(other)) ++differ;
  }
  report(10, "determinism", differ == 0 && files >= 8 && codes == 0,
         fmt("%zu/%zu output files byte-identical across two runs of gen-mdp, solve, compare, check "
             "(exit codes sum %d)",
             files - differ, files, codes));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  auto mdps = random_ensemble();
  const auto random_only = mdps;
  for (auto& g : grid_ensemble()) mdps.push_back(std::move(g));

  criteria_1_2(mdps);
  criterion_3(random_only);
  criteria_4_8(mdps);
  criterion_5();
  criterion_6();
  criterion_7();
  report(8, "regularized coefficient bound on every solve", criterion8.ok, criterion8.detail);
  criterion_9();
  criterion_10();

  std::printf("%d criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
