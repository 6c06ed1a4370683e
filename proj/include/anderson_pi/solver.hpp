#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anderson_pi/mdp.hpp"
#include "anderson_pi/operators.hpp"

namespace anderson_pi {

enum class Scheme { VanillaVI, AndersonKKT, AndersonUnconstrained, StableAA };
enum class BetaConvention { Eq2, Eq13 };  // Eq13: beta weights the old iterates
enum class DiagnosticsLevel { Basic, Full };
enum class UpdateForm { Mixing, QuasiNewton };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct SolverConfig {
  Scheme scheme = Scheme::VanillaVI;
  std::size_t depth = 0;
  double beta = 1.0;
  BetaConvention beta_convention = BetaConvention::Eq2;
  double eta = 0.0;
  OperatorSpec op;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 0;
  bool safeguard = false;
  double safeguard_ratio = 2.0;
  DiagnosticsLevel diagnostics = DiagnosticsLevel::Basic;
  UpdateForm form = UpdateForm::Mixing;
  bool record_timing = false;
  std::optional<QTable> initial_q;  // defaults to zeros

  // beta as it enters (1 - beta) sum alpha Q + beta sum alpha TQ.
  double mixing_beta() const {
    return beta_convention == BetaConvention::Eq2 ? beta : 1.0 - beta;
  }

  // Applies the scheme rules (VanillaVI forces depth 0, KKT/Unconstrained force
  // eta 0) and validates ranges. Throws ParameterError.
  SolverConfig normalized() const;
};

// Stable 64-bit FNV-1a over the canonical config text, rendered as 16 hex digits.
std::string config_hash(const SolverConfig& cfg);
std::string describe(const SolverConfig& cfg);

struct IterationRecord {
  std::size_t k = 0;
  double residual_inf = 0.0;
  double residual_l2 = 0.0;
  bool has_step = false;  // false on the terminal record (no update taken)
  double theta = 0.0;     // infinity-norm gain
  double theta_l2 = 0.0;  // 2-norm gain certificate
  std::vector<double> alpha;
  double beta_used = 0.0;
  bool jitter_flag = false;
  double jitter = 0.0;
  bool fallback = false;
  bool safeguard_restart = false;
  double min_abs_alpha = 0.0;
  std::optional<double> theorem3_lhs, theorem3_rhs;
  std::optional<double> theorem3_inverse_ratio;  // ||G~^{-1} G||_2 when defined
  std::string theorem3_inverse_note;
  std::optional<double> prop2_bound1_lhs, prop2_bound1_rhs;
  std::optional<double> prop2_bound2_lhs, prop2_bound2_rhs;
  std::optional<double> form_discrepancy;  // ||mixing - quasi-Newton||_inf
  std::int64_t wall_nanos = 0;
};

struct SolverTrace {
  SolverConfig config;
  std::vector<IterationRecord> records;
  bool converged = false;
  bool diverged = false;
  std::size_t iterations = 0;  // number of updates taken
  QTable final_q;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, SolverTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SolverTrace& trace() const noexcept { return trace_; }

 private:
  SolverTrace trace_;
};

inline constexpr double kDivergenceThreshold = 1e12;

// Fixed-point iteration from Q0 (zero unless cfg.initial_q) until
// ||e_k||_inf <= tol or max_iter updates. Throws DivergenceError.
SolverTrace run(const TabularMdp& mdp, const SolverConfig& cfg);

inline constexpr double kOracleTolerance = 1e-13;
inline constexpr std::size_t kOracleMaxIter = 1000000;

// Vanilla iteration to ||e||_inf <= 1e-13. Throws OraclePrecisionError at the cap.
QTable fixed_point_oracle(const TabularMdp& mdp, const OperatorSpec& op,
                          double tol = kOracleTolerance, std::size_t max_iter = kOracleMaxIter);

double max_abs_difference(const QTable& a, const QTable& b);

// ---------------------------------------------------------------------------
// Ensembles

struct NamedConfig {
  std::string name;
  SolverConfig config;
};

struct EnsembleMdp {
  std::string label;
  std::int64_t seed = -1;  // generator seed, -1 when loaded from file
  TabularMdp mdp;
};

struct RunSummary {
  std::size_t config_index = 0;
  std::size_t mdp_index = 0;
  std::string config_name;
  std::string config_hash;
  std::string mdp_label;
  std::int64_t mdp_seed = -1;
  bool converged = false;
  bool failed = false;  // diverged or threw
  std::string failure;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  std::optional<double> final_error_vs_oracle;
  double theta_mean = 0.0;
  double theta_max = 0.0;
  std::size_t jitter_count = 0;
  std::size_t safeguard_count = 0;
  std::vector<double> residuals;  // residual_inf per record
};

struct ConfigAggregate {
  std::string name;
  std::string config_hash;
  std::size_t runs = 0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  double mean_iterations = 0.0;  // over converged runs
  double median_iterations = 0.0;
  std::size_t min_iterations = 0;
  std::size_t max_iterations = 0;
  std::vector<std::size_t> iteration_counts;  // per mdp, 0 when not converged
  double win_rate = 0.0;  // vs config 0: converged with strictly fewer iterations
  std::optional<double> max_error_vs_oracle;
  double theta_mean = 0.0;
  std::size_t jitter_count = 0;
  std::size_t safeguard_count = 0;
};

struct EnsembleReport {
  std::vector<RunSummary> runs;  // config-major, then mdp order
  std::vector<ConfigAggregate> aggregates;
};

// Runs every (config, mdp) pair, up to `jobs` at a time. Failures are recorded,
// never propagated. Output is independent of `jobs`.
EnsembleReport run_ensemble(const std::vector<NamedConfig>& configs,
                            const std::vector<EnsembleMdp>& mdps, int jobs = 1);

}  // namespace anderson_pi
