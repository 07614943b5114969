#include "fairsel/experiments.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

// Runs fn(r) for r in [0, reps). Each task writes only to its own slots, so
// the parallel and serial paths fill identical buffers. Errors that escape
// a task are rethrown in replication order once the loop is done.
template <class Fn>
void for_each_replication(std::size_t reps, ExecutionMode mode, Fn&& fn) {
    std::vector<std::exception_ptr> errors(reps);
    const auto n = static_cast<std::int64_t>(reps);
    if (mode == ExecutionMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::int64_t r = 0; r < n; ++r) {
            try {
                fn(static_cast<std::size_t>(r));
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    } else {
        for (std::int64_t r = 0; r < n; ++r) {
            try {
                fn(static_cast<std::size_t>(r));
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

// Ordered two-pass mean and standard error of the mean.
MeanSe mean_se(const std::vector<double>& values) {
    MeanSe out;
    out.count = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    return out;
}

double binomial_se(double p, std::size_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

void check_failures(std::size_t failed, std::size_t total, const char* what) {
    if (static_cast<double>(failed) > kFailureBudget * static_cast<double>(total)) {
        throw ExperimentError(std::string(what) + ": " + std::to_string(failed) + " of " +
                              std::to_string(total) + " tasks failed, over the 1% budget");
    }
}

bool needs_ideal(const std::vector<PolicySpec>& policies) {
    for (const auto& p : policies) {
        if (p.kind == PolicySpec::Kind::IdealFair) return true;
    }
    return false;
}

// Outcome of one policy on one pool.
struct Outcome {
    double performance = 0.0;
    int subgroup = 0;
};

// Per-replication scratch: the estimators a prefix needs, built lazily.
class PrefixFits {
public:
    explicit PrefixFits(const HistoryDataset& history) : history_(history) {}

    const Vector& beta_hat() {
        if (!beta_) beta_ = ols_fit(history_);
        return *beta_;
    }
    const FittedSelector& selector() {
        if (!selector_) selector_.emplace(fit_selector(history_, beta_hat()));
        return *selector_;
    }
    const PenalizedSystem& system(Penalty penalty) {
        auto& slot = systems_[penalty == Penalty::PairwiseWeighted ? 0 : 1];
        if (!slot) slot = penalized_system(history_, penalty);
        return *slot;
    }

private:
    const HistoryDataset& history_;
    std::optional<Vector> beta_;
    std::optional<FittedSelector> selector_;
    std::optional<PenalizedSystem> systems_[2];
};

}  // namespace

std::string penalty_name(Penalty penalty) {
    return penalty == Penalty::PairwiseWeighted ? "pairwise" : "group_mean";
}

Penalty parse_penalty(const std::string& text) {
    if (text == "pairwise") return Penalty::PairwiseWeighted;
    if (text == "group_mean") return Penalty::GroupMeanResidual;
    throw ParameterError("unknown penalty '" + text + "' (expected pairwise or group_mean)");
}

std::string PolicySpec::id() const {
    switch (kind) {
        case Kind::ParityOfTreatment: return "max";
        case Kind::EmpiricalFair: return "fair";
        case Kind::IdealFair: return "ideal";
        case Kind::FairPrediction: return "fair_prediction";
        case Kind::Penalized: return penalty_name(penalty) + ":" + format_number(lambda);
    }
    return "?";
}

PolicySpec PolicySpec::parse(const std::string& text) {
    PolicySpec spec;
    if (text == "max") return spec;
    if (text == "fair") {
        spec.kind = Kind::EmpiricalFair;
        return spec;
    }
    if (text == "ideal") {
        spec.kind = Kind::IdealFair;
        return spec;
    }
    if (text == "fair_prediction") {
        spec.kind = Kind::FairPrediction;
        return spec;
    }
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParameterError("unknown policy '" + text + "'");
    spec.kind = Kind::Penalized;
    spec.penalty = parse_penalty(text.substr(0, colon));
    const std::string number = text.substr(colon + 1);
    std::size_t used = 0;
    try {
        spec.lambda = std::stod(number, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != number.size() || !std::isfinite(spec.lambda) || spec.lambda < 0.0) {
        throw ParameterError("policy '" + text + "' needs a finite lambda >= 0");
    }
    return spec;
}

void ExperimentConfig::validate() const {
    if (pool_size < 1) throw ParameterError("pool size K must be at least 1");
    if (schedule.empty()) throw ParameterError("sample-size schedule is empty");
    for (std::size_t j = 0; j < schedule.size(); ++j) {
        if (schedule[j] < 1) throw ParameterError("sample sizes must be positive");
        if (j > 0 && schedule[j] <= schedule[j - 1]) {
            throw ParameterError("sample-size schedule must be strictly increasing");
        }
    }
    if (macro_reps < 1) throw ParameterError("macro_reps must be at least 1");
    if (policies.empty()) throw ParameterError("policy list is empty");
    if (quantile_mode.kind == QuantileMode::Kind::Bootstrap && quantile_mode.reps < 1) {
        throw ParameterError("bootstrap quantile needs at least one replicate");
    }
}

ExperimentReport run_selection_experiment(const ExperimentConfig& config) {
    config.validate();
    const std::size_t reps = config.macro_reps;
    const std::size_t cells = config.schedule.size();
    const std::size_t npol = config.policies.size();
    const DataGeneratingProcess& dgp = config.dgp;

    std::optional<IdealModel> model;
    std::optional<IdealThresholds> thresholds;
    if (needs_ideal(config.policies)) {
        model = ideal_model_from_dgp(dgp);
        thresholds.emplace(*model, config.pool_size, default_method(*model));
    }

    std::vector<Outcome> outcomes(reps * cells * npol);
    std::vector<char> ok(reps * cells, 0);

    for_each_replication(reps, config.execution, [&](std::size_t r) {
        RngStream history_rng(config.seed, r, StreamPurpose::History);
        const HistoryDataset history = sample_history(dgp, config.history_size(), history_rng);
        for (std::size_t j = 0; j < cells; ++j) {
            RngStream pool_rng(config.seed, r, StreamPurpose::Pool, j);
            const ScoredPool scored = sample_scored_pool(dgp, config.pool_size, pool_rng);
            const CandidatePool& pool = scored.pool;
            try {
                const HistoryDataset prefix = history.prefix(config.schedule[j]);
                PrefixFits fits(prefix);
                for (std::size_t i = 0; i < npol; ++i) {
                    const PolicySpec& spec = config.policies[i];
                    PolicyDecision d;
                    switch (spec.kind) {
                        case PolicySpec::Kind::ParityOfTreatment:
                            d = policy_parity_of_treatment(fits.beta_hat(), pool);
                            break;
                        case PolicySpec::Kind::EmpiricalFair: {
                            RngStream boot(config.seed, r, StreamPurpose::Bootstrap, j);
                            d = policy_empirical_fair(fits.selector(), pool, config.quantile_mode, boot);
                            break;
                        }
                        case PolicySpec::Kind::IdealFair:
                            d = policy_ideal_fair(*model, *thresholds, pool);
                            break;
                        case PolicySpec::Kind::FairPrediction:
                            d = policy_fair_prediction(fits.selector(), pool);
                            break;
                        case PolicySpec::Kind::Penalized:
                            d = policy_penalized(fits.system(spec.penalty).solve(spec.lambda), pool);
                            break;
                    }
                    outcomes[(r * cells + j) * npol + i] = {
                        scored.performance[static_cast<Eigen::Index>(d.selected_index)], d.selected_subgroup};
                }
                ok[r * cells + j] = 1;
            } catch (const Error&) {
                ok[r * cells + j] = 0;
            }
        }
    });

    ExperimentReport report;
    report.total_tasks = reps * cells;
    for (char flag : ok) report.failed_tasks += flag ? 0 : 1;
    check_failures(report.failed_tasks, report.total_tasks, "selection experiment");

    std::vector<double> perf;
    perf.reserve(reps);
    for (std::size_t j = 0; j < cells; ++j) {
        for (std::size_t i = 0; i < npol; ++i) {
            perf.clear();
            std::size_t ones = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                if (!ok[r * cells + j]) continue;
                const Outcome& o = outcomes[(r * cells + j) * npol + i];
                perf.push_back(o.performance);
                ones += o.subgroup == 1 ? 1 : 0;
            }
            const MeanSe ms = mean_se(perf);
            MetricsRow row;
            row.policy = config.policies[i].id();
            row.m = config.schedule[j];
            row.mean_performance = ms.mean;
            row.se_performance = ms.se;
            row.replications = ms.count;
            row.parity = ms.count ? static_cast<double>(ones) / static_cast<double>(ms.count) : 0.0;
            row.se_parity = binomial_se(row.parity, ms.count);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<SweepRow> run_lambda_sweep(const ExperimentConfig& config,
                                       const std::vector<Penalty>& penalties,
                                       const std::vector<double>& lambdas) {
    config.validate();
    if (lambdas.empty()) throw ParameterError("lambda list is empty");
    if (penalties.empty()) throw ParameterError("penalty list is empty");
    for (double lambda : lambdas) {
        if (!std::isfinite(lambda) || lambda < 0.0) throw ParameterError("lambda must be finite and >= 0");
    }
    const std::size_t reps = config.macro_reps;
    const std::size_t ncell = penalties.size() * lambdas.size();
    const std::size_t pool_index = config.schedule.size() - 1;
    const DataGeneratingProcess& dgp = config.dgp;

    std::vector<Outcome> outcomes(reps * ncell);
    std::vector<char> ok(reps * ncell, 0);

    for_each_replication(reps, config.execution, [&](std::size_t r) {
        RngStream history_rng(config.seed, r, StreamPurpose::History);
        const HistoryDataset history = sample_history(dgp, config.history_size(), history_rng);
        RngStream pool_rng(config.seed, r, StreamPurpose::Pool, pool_index);
        const ScoredPool scored = sample_scored_pool(dgp, config.pool_size, pool_rng);
        for (std::size_t a = 0; a < penalties.size(); ++a) {
            std::optional<PenalizedSystem> system;
            try {
                system = penalized_system(history, penalties[a]);
            } catch (const Error&) {
                continue;
            }
            for (std::size_t b = 0; b < lambdas.size(); ++b) {
                const std::size_t cell = r * ncell + a * lambdas.size() + b;
                try {
                    const PolicyDecision d = policy_penalized(system->solve(lambdas[b]), scored.pool);
                    outcomes[cell] = {scored.performance[static_cast<Eigen::Index>(d.selected_index)],
                                      d.selected_subgroup};
                    ok[cell] = 1;
                } catch (const Error&) {
                    ok[cell] = 0;
                }
            }
        }
    });

    std::size_t failed = 0;
    for (char flag : ok) failed += flag ? 0 : 1;
    check_failures(failed, ok.size(), "lambda sweep");

    std::vector<SweepRow> rows;
    std::vector<double> perf;
    for (std::size_t a = 0; a < penalties.size(); ++a) {
        for (std::size_t b = 0; b < lambdas.size(); ++b) {
            perf.clear();
            std::size_t ones = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const std::size_t cell = r * ncell + a * lambdas.size() + b;
                if (!ok[cell]) continue;
                perf.push_back(outcomes[cell].performance);
                ones += outcomes[cell].subgroup == 1 ? 1 : 0;
            }
            const MeanSe ms = mean_se(perf);
            SweepRow row;
            row.penalty = penalties[a];
            row.lambda = lambdas[b];
            row.performance = ms.mean;
            row.se_performance = ms.se;
            row.replications = ms.count;
            row.parity = ms.count ? static_cast<double>(ones) / static_cast<double>(ms.count) : 0.0;
            row.se_parity = binomial_se(row.parity, ms.count);
            rows.push_back(row);
        }
    }
    return rows;
}

RateReport estimate_deviation_rate(const DataGeneratingProcess& dgp, std::size_t pool_size,
                                   const std::vector<std::size_t>& n_schedule,
                                   std::size_t macro_reps, std::uint64_t seed,
                                   QuantileMode quantile_mode, ExecutionMode execution) {
    if (pool_size < 1) throw ParameterError("pool size K must be at least 1");
    if (macro_reps < 1) throw ParameterError("macro_reps must be at least 1");
    if (n_schedule.empty()) throw ParameterError("sample-size schedule is empty");
    for (std::size_t j = 1; j < n_schedule.size(); ++j) {
        if (n_schedule[j] <= n_schedule[j - 1]) throw ParameterError("sample-size schedule must be strictly increasing");
    }
    const IdealModel model = ideal_model_from_dgp(dgp);
    const IdealThresholds thresholds(model, pool_size, default_method(model));
    const std::size_t cells = n_schedule.size();

    std::vector<char> deviated(macro_reps * cells, 0);
    std::vector<char> ok(macro_reps * cells, 0);

    for_each_replication(macro_reps, execution, [&](std::size_t r) {
        RngStream history_rng(seed, r, StreamPurpose::History);
        const HistoryDataset history = sample_history(dgp, n_schedule.back(), history_rng);
        RngStream pool_rng(seed, r, StreamPurpose::Pool);
        const CandidatePool pool = sample_pool(dgp, pool_size, pool_rng);
        const std::size_t ideal = policy_ideal_fair(model, thresholds, pool).selected_index;
        for (std::size_t j = 0; j < cells; ++j) {
            try {
                const HistoryDataset prefix = history.prefix(n_schedule[j]);
                const FittedSelector selector = fit_selector(prefix);
                RngStream boot(seed, r, StreamPurpose::Bootstrap, j);
                const auto chosen = policy_empirical_fair(selector, pool, quantile_mode, boot).selected_index;
                deviated[r * cells + j] = chosen != ideal ? 1 : 0;
                ok[r * cells + j] = 1;
            } catch (const Error&) {
                ok[r * cells + j] = 0;
            }
        }
    });

    std::size_t failed = 0;
    for (char flag : ok) failed += flag ? 0 : 1;
    check_failures(failed, ok.size(), "deviation-rate study");

    RateReport report;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
        std::size_t count = 0;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < macro_reps; ++r) {
            if (!ok[r * cells + j]) continue;
            ++count;
            hits += deviated[r * cells + j];
        }
        RateRow row;
        row.n = n_schedule[j];
        row.replications = count;
        row.p_deviation = count ? static_cast<double>(hits) / static_cast<double>(count) : 0.0;
        row.se = binomial_se(row.p_deviation, count);
        report.rows.push_back(row);
        if (row.p_deviation > 0.0) {
            const double x = std::log(static_cast<double>(row.n));
            const double y = std::log(row.p_deviation);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++report.points_used;
        }
    }
    const double k = static_cast<double>(report.points_used);
    const double denom = k * sxx - sx * sx;
    report.slope = (report.points_used >= 2 && denom > 0.0) ? (k * sxy - sx * sy) / denom
                                                          : std::numeric_limits<double>::quiet_NaN();
    return report;
}

std::vector<ExtremeValueRow> run_extreme_value_study(const ExtremeValueParams& params,
                                                     const std::vector<std::size_t>& k_schedule,
                                                     std::size_t macro_reps, std::uint64_t seed,
                                                     ExecutionMode execution) {
    if (macro_reps < 1) throw ParameterError("macro_reps must be at least 1");
    if (k_schedule.empty()) throw ParameterError("K schedule is empty");
    for (std::size_t k : k_schedule) {
        if (k < 1) throw ParameterError("pool sizes must be positive");
    }
    const DataGeneratingProcess dgp =
        make_synthetic_dgp(params.dimension, params.rho, params.tau0, params.tau1, 1.0, seed, true);
    const std::size_t cells = k_schedule.size();
    std::vector<char> minority(macro_reps * cells, 0);

    for_each_replication(macro_reps, execution, [&](std::size_t r) {
        for (std::size_t j = 0; j < cells; ++j) {
            RngStream pool_rng(seed, r, StreamPurpose::Pool, j);
            const CandidatePool pool = sample_pool(dgp, k_schedule[j], pool_rng);
            minority[r * cells + j] =
                static_cast<char>(policy_parity_of_treatment(dgp.beta(), pool).selected_subgroup);
        }
    });

    std::vector<ExtremeValueRow> rows;
    for (std::size_t j = 0; j < cells; ++j) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < macro_reps; ++r) hits += minority[r * cells + j];
        ExtremeValueRow row;
        row.k = k_schedule[j];
        row.p_minority = static_cast<double>(hits) / static_cast<double>(macro_reps);
        row.se = binomial_se(row.p_minority, macro_reps);
        rows.push_back(row);
    }
    return rows;
}

IdealModel counterexample_model() {
    Vector beta(1);
    beta << 1.0;
    return IdealModel{beta, ScoreLaw::uniform(0.375, 0.625), ScoreLaw::uniform(0.0, 1.0)};
}

CounterexampleRecord verify_counterexample(std::size_t mc_samples, std::uint64_t seed,
                                           ExecutionMode execution) {
    if (mc_samples < 10000) throw ParameterError("counterexample needs at least 10^4 samples");
    const IdealModel model = counterexample_model();
    const IdealThresholds thresholds(model, 2, AnalyticGrid{});
    constexpr std::size_t kChunk = 10000;
    const std::size_t chunks = (mc_samples + kChunk - 1) / kChunk;
    std::vector<double> value_u(mc_samples);
    std::vector<double> value_alt(mc_samples);
    std::vector<double> value_star(mc_samples);
    const GroupLabels z{0, 1};

    for_each_replication(chunks, execution, [&](std::size_t c) {
        RngStream rng(seed, c, StreamPurpose::MonteCarlo);
        const std::size_t end = std::min(mc_samples, (c + 1) * kChunk);
        Matrix x(2, 1);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const double u1 = rng.uniform();
            const double u2 = rng.uniform();
            x(0, 0) = 0.375 + 0.25 * u1;
            x(1, 0) = u2;
            const CandidatePool pool(x, z);
            value_u[i] = x(static_cast<Eigen::Index>(policy_fair_prediction(model, pool).selected_index), 0);
            value_alt[i] = u2 > 0.5 ? x(1, 0) : x(0, 0);
            value_star[i] =
                x(static_cast<Eigen::Index>(policy_ideal_fair(model, thresholds, pool).selected_index), 0);
        }
    });

    CounterexampleRecord rec;
    const MeanSe u = mean_se(value_u);
    const MeanSe alt = mean_se(value_alt);
    const MeanSe star = mean_se(value_star);
    rec.pi_u_value = u.mean;
    rec.alt_policy_value = alt.mean;
    rec.pi_star_value = star.mean;
    rec.se_pi_u = u.se;
    rec.se_alt = alt.se;
    rec.se_pi_star = star.se;
    std::vector<double> gap(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i) gap[i] = value_star[i] - value_alt[i];
    rec.se_gap_star_alt = mean_se(gap).se;
    for (std::size_t i = 0; i < mc_samples; ++i) gap[i] = value_alt[i] - value_u[i];
    rec.se_gap_alt_u = mean_se(gap).se;
    rec.threshold = thresholds(1, 1);
    return rec;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "policy,m,mean_performance,se_performance,parity,se_parity,replications\n";
    for (const auto& row : rows) {
        out << row.policy << ',' << row.m << ',' << format_number(row.mean_performance) << ','
            << format_number(row.se_performance) << ',' << format_number(row.parity) << ','
            << format_number(row.se_parity) << ',' << row.replications << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "penalty,lambda,performance,parity\n";
    for (const auto& row : rows) {
        out << penalty_name(row.penalty) << ',' << format_number(row.lambda) << ','
            << format_number(row.performance) << ',' << format_number(row.parity) << '\n';
    }
}

void write_rates_csv(std::ostream& out, const RateReport& report) {
    out << "n,p_deviation,se\n";
    for (const auto& row : report.rows) {
        out << row.n << ',' << format_number(row.p_deviation) << ',' << format_number(row.se) << '\n';
    }
}

void write_rates_slope_csv(std::ostream& out, const RateReport& report) {
    out << "slope,points_used\n" << format_number(report.slope) << ',' << report.points_used << '\n';
}

void write_extreme_value_csv(std::ostream& out, const std::vector<ExtremeValueRow>& rows) {
    out << "K,p_minority,se\n";
    for (const auto& row : rows) {
        out << row.k << ',' << format_number(row.p_minority) << ',' << format_number(row.se) << '\n';
    }
}

void write_counterexample_csv(std::ostream& out, const CounterexampleRecord& record) {
    out << "policy,value,se\n";
    out << "pi_u," << format_number(record.pi_u_value) << ',' << format_number(record.se_pi_u) << '\n';
    out << "alternative," << format_number(record.alt_policy_value) << ',' << format_number(record.se_alt)
        << '\n';
    out << "pi_star," << format_number(record.pi_star_value) << ',' << format_number(record.se_pi_star)
        << '\n';
}

}  // namespace fairsel
