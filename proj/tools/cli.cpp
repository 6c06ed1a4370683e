#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "anderson_pi/diagnostics.hpp"
#include "anderson_pi/errors.hpp"
#include "anderson_pi/mdp.hpp"
#include "anderson_pi/solver.hpp"
#include "anderson_pi/trace_io.hpp"

namespace anderson_pi::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenFlags {
  std::string kind = "random";
  std::optional<std::uint64_t> seed;
  std::size_t states = 30, actions = 4, branching = 3;
  double reward_scale = 1.0, gamma = 0.95;
  std::size_t width = 5, height = 5;
  double slip = 0.1, goal_reward = 1.0;
  std::string out;
};

struct SolverFlags {
  std::string scheme = "vanilla";
  std::size_t m = 5;
  double beta = 1.0;
  std::string convention = "eq2";
  double eta = 0.1;
  std::string op = "max";
  double omega = 5.0;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  bool safeguard = false;
  std::string diagnostics = "basic";
  std::string form = "mixing";
  bool record_timing = false;
};

struct SolveFlags {
  SolverFlags s;
  std::string mdp, init, out = ".";
  bool oracle = false;
};

struct CompareFlags {
  SolverFlags s;
  std::vector<std::string> schemes, mdps;
  std::string seeds;
  GenFlags gen;
  int jobs = 1;
  std::string out = ".";
};

struct CheckFlags {
  diagnostics::SuiteOptions suite;
  std::string out;
};

void add_solver_options(CLI::App& app, SolverFlags& f, bool with_scheme) {
  if (with_scheme) app.add_option("--scheme", f.scheme, "vanilla|kkt|unconstrained|stable-aa");
  app.add_option("-m,--depth", f.m, "history depth");
  app.add_option("--beta", f.beta, "damping in [0,1]");
  app.add_option("--beta-convention", f.convention)->check(CLI::IsMember({"eq2", "eq13"}));
  app.add_option("--eta", f.eta, "stable-aa regularization");
  app.add_option("--op", f.op)->check(CLI::IsMember({"max", "mellowmax", "softmax"}));
  app.add_option("--omega", f.omega);
  app.add_option("--tol", f.tol);
  app.add_option("--max-iter", f.max_iter);
  app.add_flag("--safeguard", f.safeguard, "restart history on residual growth");
  app.add_option("--diagnostics", f.diagnostics)->check(CLI::IsMember({"basic", "full"}));
  app.add_option("--form", f.form)->check(CLI::IsMember({"mixing", "qn"}));
  app.add_flag("--record-timing", f.record_timing, "fill the wall_nanos column");
}

void add_generator_options(CLI::App& app, GenFlags& g) {
  app.add_option("--kind", g.kind)->check(CLI::IsMember({"random", "grid"}));
  app.add_option("--states", g.states);
  app.add_option("--actions", g.actions);
  app.add_option("--branching", g.branching);
  app.add_option("--reward-scale", g.reward_scale);
  app.add_option("--gamma", g.gamma);
  app.add_option("--width", g.width);
  app.add_option("--height", g.height);
  app.add_option("--slip", g.slip);
  app.add_option("--goal-reward", g.goal_reward);
}

SolverConfig to_config(const SolverFlags& f) {
  SolverConfig c;
  c.scheme = scheme_from_string(f.scheme);
  c.depth = f.m;
  c.beta = f.beta;
  c.beta_convention = f.convention == "eq13" ? BetaConvention::Eq13 : BetaConvention::Eq2;
  c.eta = f.eta;
  c.op = OperatorSpec{operator_kind_from_string(f.op), f.omega};
  c.tol = f.tol;
  c.max_iter = f.max_iter;
  c.safeguard = f.safeguard;
  c.diagnostics = f.diagnostics == "full" ? DiagnosticsLevel::Full : DiagnosticsLevel::Basic;
  c.form = f.form == "qn" ? UpdateForm::QuasiNewton : UpdateForm::Mixing;
  c.record_timing = f.record_timing;
  return c.normalized();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("output directory not writable: " + dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

TabularMdp generate(const GenFlags& g, std::uint64_t seed) {
  if (g.kind == "grid") return generate_gridworld(g.width, g.height, g.slip, g.goal_reward, g.gamma);
  return generate_random_mdp(seed, g.states, g.actions, g.branching, g.reward_scale, g.gamma);
}

void print_validation(const TabularMdp& mdp, std::ostream& os) {
  const auto problems = validate(mdp);
  if (problems.empty()) {
    os << "valid: " << mdp.n_states() << " states, " << mdp.n_actions()
       << " actions, gamma=" << format_real(mdp.gamma()) << "\n";
  } else {
    for (const auto& p : problems) os << "invalid: " << p << "\n";
  }
}

int cmd_gen_mdp(const GenFlags& g) {
  if (g.kind == "random" && !g.seed) throw UsageError("gen-mdp --kind random requires --seed");
  const TabularMdp mdp = generate(g, g.seed.value_or(0));
  save_mdp(mdp, g.out);
  print_validation(mdp, std::cout);
  return validate(mdp).empty() ? kOk : kUsage;
}

ordered_json summary_json(const SolverTrace& t, const std::optional<double>& oracle_error) {
  ordered_json j;
  j["scheme"] = to_string(t.config.scheme);
  j["config_hash"] = config_hash(t.config);
  j["config"] = describe(t.config);
  j["converged"] = t.converged;
  j["diverged"] = t.diverged;
  j["iterations"] = t.iterations;
  const double r = t.records.empty() ? 0.0 : t.records.back().residual_inf;
  j["final_residual"] = std::isfinite(r) ? ordered_json(r) : ordered_json(nullptr);
  j["oracle_error"] = oracle_error ? ordered_json(*oracle_error) : ordered_json(nullptr);
  ordered_json q = ordered_json::array();
  for (std::size_t s = 0; s < t.final_q.n_states(); ++s) {
    const auto row = t.final_q.row(s);
    q.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["q"] = std::move(q);
  return j;
}

int cmd_solve(const SolveFlags& f) {
  SolverConfig cfg = to_config(f.s);
  const TabularMdp mdp = load_mdp(f.mdp);
  if (const auto problems = validate(mdp); !problems.empty()) {
    throw UsageError("mdp " + f.mdp + " fails validation: " + problems.front());
  }
  if (!f.init.empty()) cfg.initial_q = load_q_table(f.init, mdp.n_states(), mdp.n_actions());
  ensure_dir(f.out);

  SolverTrace trace;
  int code = kOk;
  try {
    trace = run(mdp, cfg);
    if (!trace.converged) code = kNotConverged;
  } catch (const DivergenceError& e) {
    trace = e.trace();
    code = kDiverged;
    std::cerr << "diverged: " << e.what() << "\n";
  }

  std::optional<double> oracle_error;
  if (f.oracle && code != kDiverged) {
    oracle_error = max_abs_difference(trace.final_q, fixed_point_oracle(mdp, cfg.op));
  }

  write_trace_csv(trace, fs::path(f.out) / "trace.csv");
  open_out(fs::path(f.out) / "summary.json") << summary_json(trace, oracle_error).dump(2) << "\n";
  if (cfg.diagnostics == DiagnosticsLevel::Full) {
    auto out = open_out(fs::path(f.out) / "checks.jsonl");
    out << diagnostics::report_header_json() << "\n";
    for (const auto& r : diagnostics::check_trace_bounds(trace)) {
      out << diagnostics::to_json_line(r) << "\n";
    }
  }

  std::cout << to_string(cfg.scheme) << ": " << (trace.converged ? "converged" : "stopped")
            << " after " << trace.iterations << " iterations, residual "
            << format_real(trace.records.empty() ? 0.0 : trace.records.back().residual_inf);
  if (oracle_error) std::cout << ", oracle error " << format_real(*oracle_error);
  std::cout << "\n";
  return code;
}

std::pair<std::int64_t, std::int64_t> parse_seed_range(const std::string& text) {
  const auto dash = text.find('-');
  try {
    std::size_t used = 0;
    if (dash == std::string::npos) {
      const auto v = std::stoll(text, &used);
      if (used != text.size() || v < 0) throw std::invalid_argument(text);
      return {v, v};
    }
    const auto lo = std::stoll(text.substr(0, dash), &used);
    if (used != dash) throw std::invalid_argument(text);
    const auto tail = text.substr(dash + 1);
    const auto hi = std::stoll(tail, &used);
    if (used != tail.size() || lo < 0 || hi < lo) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("--seeds expects N or LO-HI, got '" + text + "'");
  }
}

SolverFlags apply_overrides(SolverFlags f, const SchemeSpec& spec) {
  f.scheme = spec.scheme;
  for (const auto& [key, value] : spec.overrides) {
    try {
      if (key == "m") {
        f.m = static_cast<std::size_t>(std::stoul(value));
      } else if (key == "beta") {
        f.beta = std::stod(value);
      } else if (key == "eta") {
        f.eta = std::stod(value);
      } else if (key == "safeguard") {
        f.safeguard = value == "1" || value == "true";
      } else if (key == "convention") {
        f.convention = value;
      } else {
        throw UsageError("unknown scheme option '" + key + "' in '" + spec.text + "'");
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad value for '" + key + "' in '" + spec.text + "'");
    }
  }
  return f;
}

void print_win_table(const EnsembleReport& rep, std::ostream& os) {
  std::size_t width = 6;
  for (const auto& a : rep.aggregates) width = std::max(width, a.name.size());
  os << std::left << std::setw(static_cast<int>(width) + 2) << "scheme" << std::right
     << std::setw(10) << "converged" << std::setw(8) << "failed" << std::setw(10) << "mean"
     << std::setw(9) << "median" << std::setw(7) << "min" << std::setw(8) << "max"
     << std::setw(10) << "win_rate" << "\n";
  for (const auto& a : rep.aggregates) {
    std::ostringstream conv;
    conv << a.converged << "/" << a.runs;
    os << std::left << std::setw(static_cast<int>(width) + 2) << a.name << std::right
       << std::setw(10) << conv.str() << std::setw(8) << a.failed << std::fixed
       << std::setprecision(1) << std::setw(10) << a.mean_iterations << std::setw(9)
       << a.median_iterations << std::setw(7) << a.min_iterations << std::setw(8)
       << a.max_iterations << std::setprecision(3) << std::setw(10) << a.win_rate << "\n";
    os.unsetf(std::ios::floatfield);
  }
}

int cmd_compare(const CompareFlags& f) {
  if (f.schemes.size() < 2) throw UsageError("compare needs at least two --scheme specs");
  if (f.mdps.empty() == f.seeds.empty()) {
    throw UsageError("compare needs exactly one MDP source: --mdp files or --seeds");
  }
  std::vector<NamedConfig> configs;
  for (const auto& text : f.schemes) {
    configs.push_back({text, to_config(apply_overrides(f.s, parse_scheme_spec(text)))});
  }

  std::vector<EnsembleMdp> mdps;
  if (!f.seeds.empty()) {
    const auto [lo, hi] = parse_seed_range(f.seeds);
    for (auto s = lo; s <= hi; ++s) {
      mdps.push_back({f.gen.kind + "-" + std::to_string(s), s,
                      generate(f.gen, static_cast<std::uint64_t>(s))});
    }
  } else {
    for (const auto& path : f.mdps) mdps.push_back({path, -1, load_mdp(path)});
  }
  if (f.jobs < 1) throw UsageError("--jobs must be positive");

  ensure_dir(f.out);
  const EnsembleReport rep = run_ensemble(configs, mdps, f.jobs);
  {
    auto out = open_out(fs::path(f.out) / "report.jsonl");
    write_ensemble_jsonl(rep, out);
  }
  {
    auto out = open_out(fs::path(f.out) / "residuals_long.csv");
    write_residual_long_csv(rep, out);
  }
  {
    auto out = open_out(fs::path(f.out) / "aggregates.jsonl");
    for (const auto& a : rep.aggregates) {
      ordered_json j;
      j["scheme"] = a.name;
      j["config_hash"] = a.config_hash;
      j["runs"] = a.runs;
      j["converged"] = a.converged;
      j["failed"] = a.failed;
      j["mean_iterations"] = a.mean_iterations;
      j["median_iterations"] = a.median_iterations;
      j["win_rate"] = a.win_rate;
      j["iteration_counts"] = a.iteration_counts;
      j["max_error_vs_oracle"] =
          a.max_error_vs_oracle ? ordered_json(*a.max_error_vs_oracle) : ordered_json(nullptr);
      out << j.dump() << "\n";
    }
  }
  print_win_table(rep, std::cout);

  const bool all_failed = std::all_of(rep.runs.begin(), rep.runs.end(),
                                      [](const RunSummary& r) { return r.failed; });
  return all_failed ? kDiverged : kOk;
}

int cmd_check(const CheckFlags& f) {
  const auto records = diagnostics::run_check_suite(f.suite);
  std::ostringstream report;
  report << diagnostics::report_header_json() << "\n";
  for (const auto& r : records) report << diagnostics::to_json_line(r) << "\n";
  if (f.out.empty()) {
    std::cout << report.str();
  } else {
    open_out(f.out) << report.str();
  }

  std::size_t failed = 0, findings = 0;
  for (const auto& r : records) {
    if (r.satisfied) continue;
    if (r.asserted) {
      if (failed++ < 10) std::cerr << "asserted bound failed: " << diagnostics::to_json_line(r) << "\n";
    } else {
      ++findings;
    }
  }
  std::cerr << records.size() << " checks, " << failed << " asserted failures, " << findings
            << " report-only findings\n";
  return failed ? kBoundFailure : kOk;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_real(v.get<double>());
  return v.dump();
}

}  // namespace

SchemeSpec parse_scheme_spec(const std::string& text) {
  SchemeSpec spec;
  spec.text = text;
  const auto colon = text.find(':');
  spec.scheme = text.substr(0, colon);
  if (spec.scheme.empty()) throw ParameterError("empty scheme name in '" + text + "'");
  scheme_from_string(spec.scheme);
  if (colon == std::string::npos) return spec;
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw ParameterError("expected key=value in scheme spec '" + text + "'");
    }
    spec.overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return spec;
}

std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (std::next(it) == args.end()) throw UsageError("--config needs a path");
  const std::string path = *std::next(it);
  args.erase(it, it + 2);

  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a flat JSON object");

  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = (key.size() == 1 ? "-" : "--") + key;
    if (has_flag(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        extra.push_back(flag);
        extra.push_back(json_scalar(v));
      }
    } else if (value.is_primitive() && !value.is_null()) {
      extra.push_back(flag);
      extra.push_back(json_scalar(value));
    } else {
      throw UsageError("config key '" + key + "' must be a scalar or a list");
    }
  }
  const auto insert_at = args.empty() ? args.end() : args.begin() + 1;
  args.insert(insert_at, extra.begin(), extra.end());
  return args;
}

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Anderson-accelerated value iteration for tabular MDPs", "anderson-pi"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-mdp", "generate an MDP file");
  add_generator_options(*gen_cmd, gen);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("-o,--out", gen.out)->required();

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "run one solver on an MDP file");
  solve_cmd->add_option("--mdp", solve.mdp)->required();
  add_solver_options(*solve_cmd, solve.s, true);
  solve_cmd->add_flag("--oracle", solve.oracle, "report the error against a 1e-13 reference");
  solve_cmd->add_option("--init", solve.init, "initial Q-table JSON");
  solve_cmd->add_option("--out", solve.out, "output directory");

  CompareFlags cmp;
  if (const char* env = std::getenv("ANDERSON_PI_JOBS")) {
    try {
      cmp.jobs = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "ignoring ANDERSON_PI_JOBS=" << env << "\n";
    }
  }
  auto* cmp_cmd = app.add_subcommand("compare", "run several schemes over an MDP ensemble");
  cmp_cmd->add_option("--scheme", cmp.schemes, "scheme spec, e.g. stable-aa:m=5,eta=0.1");
  cmp_cmd->add_option("--mdp", cmp.mdps, "MDP files");
  cmp_cmd->add_option("--seeds", cmp.seeds, "generator seed range LO-HI");
  add_generator_options(*cmp_cmd, cmp.gen);
  add_solver_options(*cmp_cmd, cmp.s, false);
  cmp_cmd->add_option("--jobs", cmp.jobs, "worker threads (default $ANDERSON_PI_JOBS or 1)");
  cmp_cmd->add_option("--out", cmp.out, "output directory");

  CheckFlags chk;
  auto* chk_cmd = app.add_subcommand("check", "run the bound-check suite");
  chk_cmd->add_option("--seed", chk.suite.seed);
  chk_cmd->add_option("--pairs", chk.suite.pairs, "Q-pairs per operator");
  chk_cmd->add_option("--histories", chk.suite.histories, "random histories for solver checks");
  chk_cmd->add_option("--eta", chk.suite.eta);
  chk_cmd->add_option("--beta", chk.suite.beta);
  chk_cmd->add_option("--out", chk.out, "report path (default stdout)");

  try {
    args = merge_config_file(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_mdp(gen);
    if (*solve_cmd) return cmd_solve(solve);
    if (*cmp_cmd) return cmd_compare(cmp);
    if (*chk_cmd) return cmd_check(chk);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace anderson_pi::cli
