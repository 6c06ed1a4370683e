#include "anderson_pi/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "anderson_pi/errors.hpp"

namespace anderson_pi {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vector(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_real(v[i]);
  }
  return s + "]";
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_real(r.residual_inf) << ',' << format_real(r.residual_l2) << ','
        << (r.has_step ? format_real(r.theta) : "") << ',' << format_real(r.beta_used) << ','
        << (r.jitter_flag ? 1 : 0) << ",\"" << format_vector(r.alpha) << "\"," << r.wall_nanos
        << '\n';
  }
}

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_trace_csv(trace, out);
}

void write_ensemble_jsonl(const EnsembleReport& report, std::ostream& out) {
  for (const auto& r : report.runs) {
    nlohmann::ordered_json j;
    j["config_hash"] = r.config_hash;
    j["scheme"] = r.config_name;
    j["mdp"] = r.mdp_label;
    j["mdp_seed"] = r.mdp_seed;
    j["converged"] = r.converged;
    j["failed"] = r.failed;
    j["iterations"] = r.iterations;
    j["final_residual"] = std::isfinite(r.final_residual) ? nlohmann::ordered_json(r.final_residual)
                                                          : nlohmann::ordered_json(nullptr);
    j["final_error_vs_oracle"] = r.final_error_vs_oracle
                                     ? nlohmann::ordered_json(*r.final_error_vs_oracle)
                                     : nlohmann::ordered_json(nullptr);
    j["theta_mean"] = r.theta_mean;
    j["jitter_count"] = r.jitter_count;
    j["safeguard_count"] = r.safeguard_count;
    if (r.failed) j["failure"] = r.failure;
    out << j.dump() << '\n';
  }
}

void write_residual_long_csv(const EnsembleReport& report, std::ostream& out) {
  out << "scheme,mdp_seed,iter,residual_inf\n";
  for (const auto& r : report.runs) {
    for (std::size_t k = 0; k < r.residuals.size(); ++k) {
      out << r.config_name << ',' << r.mdp_seed << ',' << k << ','
          << format_real(r.residuals[k]) << '\n';
    }
  }
}

QTable load_q_table(const std::filesystem::path& path, std::size_t n_states,
                    std::size_t n_actions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("Q-table file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("q") || !doc["q"].is_array()) {
    throw FormatError("Q-table file: expected an object with field `q`");
  }
  const auto& rows = doc["q"];
  if (rows.size() != n_states) throw FormatError("Q-table file: q: wrong number of states");
  std::vector<double> values;
  values.reserve(n_states * n_actions);
  for (std::size_t s = 0; s < n_states; ++s) {
    if (!rows[s].is_array() || rows[s].size() != n_actions) {
      throw FormatError("Q-table file: q[" + std::to_string(s) + "]: wrong number of actions");
    }
    for (const auto& v : rows[s]) {
      if (!v.is_number()) throw FormatError("Q-table file: q[" + std::to_string(s) + "]: not a number");
      values.push_back(v.get<double>());
    }
  }
  QTable q(n_states, n_actions, std::move(values));
  if (!q.all_finite()) throw FormatError("Q-table file: non-finite entry");
  return q;
}

}  // namespace anderson_pi
