#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "anderson_pi/anderson.hpp"
#include "anderson_pi/mdp.hpp"
#include "anderson_pi/operators.hpp"
#include "anderson_pi/solver.hpp"

namespace anderson_pi::diagnostics {

enum class BoundId { Theta01, Contraction, Theorem3, Prop2_1, Prop2_2, FormEquiv, SolverEquiv };
std::string to_string(BoundId id);

inline constexpr double kContractionSlack = 1e-12;
inline constexpr double kThetaSlack = 1e-9;
inline constexpr double kTheorem3Slack = 1e-6;
inline constexpr double kProp2Slack = 1e-9;
inline constexpr double kFormEquivTolerance = 1e-8;
inline constexpr double kSolverEquivTolerance = 1e-8;

struct BoundCheckRecord {
  BoundId bound_id = BoundId::Theta01;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool satisfied = false;  // lhs <= rhs + slack
  bool asserted = true;    // false: finding is reported, never fails a run
  std::int64_t iter = -1;
  std::string config_hash;
  std::string detail;
};

BoundCheckRecord make_record(BoundId id, double lhs, double rhs, double slack, bool asserted,
                             std::int64_t iter = -1, std::string config_hash = {},
                             std::string detail = {});

// ||TQ - TQ'||_inf <= gamma ||Q - Q'||_inf over random pairs with entries in
// [-10, 10]. Even pairs are independent draws, odd pairs are local perturbations.
// Boltzmann records are report-only.
std::vector<BoundCheckRecord> check_contraction(const TabularMdp& mdp, const OperatorSpec& op,
                                                std::size_t n_pairs, std::uint64_t seed);

// Per-iteration ||G~_k||_2 <= |2/eta - beta| from a diagnostics=full trace,
// plus the ||G~^{-1} G||_2 < 1 ratio when it was computable (report-only).
// The norm bound is asserted only when its rhs is at least beta.
std::vector<BoundCheckRecord> check_theorem3(const SolverTrace& trace, double eta, double beta);

// Record 1 (asserted): ||alpha_reg||^2 <= 4 (1 + ||e_k||^2 / eta^2).
// Record 2 (report-only): ||alpha_reg - alpha_non||^2 <= cond(A)^2 ||alpha_non||^2 - (2m+1)/(m+1).
std::vector<BoundCheckRecord> check_prop2(const MixingSolution& reg, const MixingSolution& non,
                                          std::span<const double> e_k, double eta,
                                          std::size_t m);

// Theta01 on every step of a trace: 2-norm certificate asserted (<= 1),
// infinity-norm gain asserted against sqrt(n). Prop2_1 records for regularized steps.
std::vector<BoundCheckRecord> check_trace_bounds(const SolverTrace& trace);

struct RateReport {
  bool sufficient = false;
  double fitted_ratio = 0.0;  // geometric mean of ||e_k|| / ||e_{k-1}|| over the last half
  double mean_theta = 0.0;
  double gamma = 0.0;
  bool faster_than_gamma = false;
  double min_abs_alpha = 0.0;
  bool coefficient_flag = false;  // some min |alpha_i| < 1e-6
  std::size_t records = 0;
};

RateReport empirical_rate(const SolverTrace& trace, double gamma);
std::vector<RateReport> empirical_rate_report(const std::vector<SolverTrace>& traces,
                                              double gamma);

std::string to_json_line(const BoundCheckRecord& r);
// First line of every check report; documents the asserted/report-only split.
std::string report_header_json();

bool all_asserted_hold(const std::vector<BoundCheckRecord>& records);

// ---------------------------------------------------------------------------
// Self-contained suite behind `anderson-pi check`.

// p+1 random (Q, TQ) pairs of length n with entries in [-1, 1]. For n well above
// p the stacked residuals are well conditioned with high probability.
AndersonHistory random_history(std::mt19937_64& rng, std::size_t n, std::size_t p);

// max_k ||Q_mix^(k) - Q_qn^(k)||_inf over the first `iterations` updates.
double form_equivalence_gap(const TabularMdp& mdp, SolverConfig cfg, std::size_t iterations);

struct SuiteOptions {
  std::uint64_t seed = 1;
  std::size_t pairs = 1000;
  double eta = 0.1;
  double beta = 1.0;
  std::size_t histories = 1000;
};

std::vector<BoundCheckRecord> run_check_suite(const SuiteOptions& opt);

}  // namespace anderson_pi::diagnostics
