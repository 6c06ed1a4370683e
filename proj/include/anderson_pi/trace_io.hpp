#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "anderson_pi/operators.hpp"
#include "anderson_pi/solver.hpp"

namespace anderson_pi {

// Shortest text that reads back to the same double (17 significant digits).
std::string format_real(double v);
// "[a,b,c]"
std::string format_vector(const std::vector<double>& v);

inline constexpr const char* kTraceCsvHeader =
    "iter,residual_inf,residual_l2,theta,beta,jitter,alpha_json,wall_nanos";

void write_trace_csv(const SolverTrace& trace, std::ostream& out);
void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);

// One JSON object per line: config_hash, mdp_seed, converged, iterations,
// final_error_vs_oracle, plus scheme name and failure status.
void write_ensemble_jsonl(const EnsembleReport& report, std::ostream& out);
// Long format for plotting: scheme,mdp_seed,iter,residual_inf
void write_residual_long_csv(const EnsembleReport& report, std::ostream& out);

QTable load_q_table(const std::filesystem::path& path, std::size_t n_states,
                    std::size_t n_actions);

}  // namespace anderson_pi
