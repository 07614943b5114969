#pragma once

// Macro-replication harness for the selection studies. Replication r draws
// all of its randomness from streams keyed by (seed, r), and results are
// reduced in replication order, so output does not depend on the thread
// count or on whether the OpenMP or the serial path runs.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fairsel/core_model.hpp"
#include "fairsel/policies.hpp"

namespace fairsel {

enum class ExecutionMode { Parallel, Serial };

struct PolicySpec {
    enum class Kind { ParityOfTreatment, EmpiricalFair, IdealFair, FairPrediction, Penalized };
    Kind kind = Kind::ParityOfTreatment;
    Penalty penalty = Penalty::PairwiseWeighted;
    double lambda = 0.0;

    /// "max", "fair", "ideal", "fair_prediction", "pairwise:<lambda>",
    /// "group_mean:<lambda>".
    std::string id() const;
    static PolicySpec parse(const std::string& text);
};

std::string penalty_name(Penalty penalty);
Penalty parse_penalty(const std::string& text);

struct ExperimentConfig {
    DataGeneratingProcess dgp;
    std::size_t pool_size = 10;
    std::vector<std::size_t> schedule{};  // history sizes m_1 < ... < m_J = n
    std::size_t macro_reps = 1000;
    std::vector<PolicySpec> policies{};
    QuantileMode quantile_mode = QuantileMode::exact();
    std::uint64_t seed = 0;
    ExecutionMode execution = ExecutionMode::Parallel;

    void validate() const;
    std::size_t history_size() const { return schedule.back(); }
};

struct MetricsRow {
    std::string policy;
    std::size_t m = 0;
    double mean_performance = 0.0;
    double se_performance = 0.0;
    double parity = 0.0;  // estimated P(Z^pi = 1)
    double se_parity = 0.0;
    std::size_t replications = 0;
};

struct ExperimentReport {
    std::vector<MetricsRow> rows;  // grouped by m, then policy order
    std::size_t failed_tasks = 0;
    std::size_t total_tasks = 0;
};

/// Failed (replication, m) tasks tolerated before the run is rejected.
inline constexpr double kFailureBudget = 0.01;

ExperimentReport run_selection_experiment(const ExperimentConfig& config);

struct SweepRow {
    Penalty penalty = Penalty::PairwiseWeighted;
    double lambda = 0.0;
    double performance = 0.0;
    double se_performance = 0.0;
    double parity = 0.0;
    double se_parity = 0.0;
    std::size_t replications = 0;
};

/// Penalized benchmarks at the full history size n = schedule.back(). Each
/// replication uses the same history and pool as run_selection_experiment
/// does at m = n, so lambda = 0 reproduces the "max" row exactly.
std::vector<SweepRow> run_lambda_sweep(const ExperimentConfig& config,
                                       const std::vector<Penalty>& penalties,
                                       const std::vector<double>& lambdas);

struct RateRow {
    std::size_t n = 0;
    double p_deviation = 0.0;
    double se = 0.0;
    std::size_t replications = 0;
};

struct RateReport {
    std::vector<RateRow> rows;
    double slope = 0.0;  // OLS slope of log p_deviation on log n; NaN with < 2 points
    std::size_t points_used = 0;
};

/// Fraction of replications in which the empirical fair policy selects a
/// different candidate than the ideal one. Each replication draws one pool
/// and one history of the largest size; smaller n use its prefix.
RateReport estimate_deviation_rate(const DataGeneratingProcess& dgp, std::size_t pool_size,
                                   const std::vector<std::size_t>& n_schedule,
                                   std::size_t macro_reps, std::uint64_t seed,
                                   QuantileMode quantile_mode = QuantileMode::exact(),
                                   ExecutionMode execution = ExecutionMode::Parallel);

struct ExtremeValueRow {
    std::size_t k = 0;
    double p_minority = 0.0;
    double se = 0.0;
};

struct ExtremeValueParams {
    double tau0 = 1.0;
    double tau1 = 0.5;
    double rho = 0.15;
    std::size_t dimension = 10;
};

/// Minority selection frequency of argmax_k beta^T X^k under the true beta.
/// Both subgroups share one covariance factor, so their score laws differ
/// only by the scale tau_z.
std::vector<ExtremeValueRow> run_extreme_value_study(const ExtremeValueParams& params,
                                                     const std::vector<std::size_t>& k_schedule,
                                                     std::size_t macro_reps, std::uint64_t seed,
                                                     ExecutionMode execution = ExecutionMode::Parallel);

struct CounterexampleRecord {
    double pi_u_value = 0.0;
    double alt_policy_value = 0.0;
    double pi_star_value = 0.0;
    double se_pi_u = 0.0;
    double se_alt = 0.0;
    double se_pi_star = 0.0;
    // Paired standard errors of the two gaps.
    double se_gap_star_alt = 0.0;
    double se_gap_alt_u = 0.0;
    double threshold = 0.0;
};

/// K = 2, Z = (0, 1), F0^{-1}(u) = 3/8 + u/4, F1^{-1}(u) = u.
IdealModel counterexample_model();

CounterexampleRecord verify_counterexample(std::size_t mc_samples, std::uint64_t seed,
                                           ExecutionMode execution = ExecutionMode::Parallel);

// CSV emitters; numbers carry 6 significant digits.
std::string format_number(double value);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_rates_csv(std::ostream& out, const RateReport& report);
void write_rates_slope_csv(std::ostream& out, const RateReport& report);
void write_extreme_value_csv(std::ostream& out, const std::vector<ExtremeValueRow>& rows);
void write_counterexample_csv(std::ostream& out, const CounterexampleRecord& record);

}  // namespace fairsel
