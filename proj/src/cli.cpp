#include "fairsel/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fairsel/config.hpp"
#include "fairsel/error.hpp"
#include "fairsel/experiments.hpp"
#include "fairsel/population_csv.hpp"

namespace fairsel {

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string seed;
    std::string out_dir;
    std::string quantile;
    int threads = 0;
};

const std::set<std::string> kCommonKeys = {"seed", "out", "threads", "execution"};
const std::set<std::string> kDgpKeys = {"dgp", "p", "rho", "tau0", "tau1", "noise_sd",
                                         "dgp_seed", "population_csv", "K"};

std::set<std::string> merged(std::initializer_list<const std::set<std::string>*> parts,
                             std::initializer_list<std::string> extra) {
    std::set<std::string> all;
    for (const auto* part : parts) all.insert(part->begin(), part->end());
    all.insert(extra.begin(), extra.end());
    return all;
}

QuantileMode parse_quantile(const std::string& text) {
    if (text == "exact") return QuantileMode::exact();
    const std::string prefix = "bootstrap:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string reps = text.substr(prefix.size());
        if (!reps.empty() && reps.find_first_not_of("0123456789") == std::string::npos) {
            const auto n = std::stoull(reps);
            if (n >= 1) return QuantileMode::bootstrap(static_cast<std::size_t>(n));
        }
    }
    throw ConfigError("quantile must be 'exact' or 'bootstrap:REPS', got '" + text + "'");
}

ExecutionMode parse_execution(const RunConfig& cfg) {
    const std::string mode = cfg.text_or("execution", "parallel");
    if (mode == "parallel") return ExecutionMode::Parallel;
    if (mode == "serial") return ExecutionMode::Serial;
    throw ConfigError("execution must be 'parallel' or 'serial', got '" + mode + "'");
}

DataGeneratingProcess build_dgp(const RunConfig& cfg) {
    const std::string kind = cfg.text_or("dgp", "synthetic");
    if (kind == "population") {
        return DataGeneratingProcess::empirical(read_population_csv(cfg.text("population_csv")));
    }
    if (kind != "synthetic") throw ConfigError("dgp must be 'synthetic' or 'population', got '" + kind + "'");
    const std::uint64_t dgp_seed = cfg.has("dgp_seed") ? cfg.integer("dgp_seed") : cfg.integer("seed");
    return make_synthetic_dgp(cfg.count_or("p", 30), cfg.real_or("rho", 0.15), cfg.real_or("tau0", 1.0),
                              cfg.real_or("tau1", 0.5), cfg.real_or("noise_sd", 1.0), dgp_seed);
}

std::filesystem::path output_dir(const RunConfig& cfg) {
    std::filesystem::path dir = cfg.text_or("out", ".");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open " + path.string() + " for writing");
    body(file);
    file.flush();
    if (!file) throw Error("failed writing " + path.string());
}

// A subcommand resolves its configuration into a job first; failures there
// are configuration errors. Running the job can only fail at runtime.
using Job = std::function<void(std::ostream& out, std::ostream& err)>;

Job plan_experiment(const RunConfig& cfg) {
    cfg.reject_unknown(merged({&kCommonKeys, &kDgpKeys}, {"schedule", "reps", "policies", "quantile"}));
    ExperimentConfig ec{.dgp = build_dgp(cfg)};
    ec.pool_size = cfg.count("K");
    ec.schedule = cfg.counts("schedule");
    ec.macro_reps = cfg.count("reps");
    const auto policy_names = cfg.has("policies")
                                  ? cfg.words("policies")
                                  : std::vector<std::string>{"max", "fair", "fair_prediction", "ideal"};
    for (const auto& name : policy_names) ec.policies.push_back(PolicySpec::parse(name));
    ec.quantile_mode = parse_quantile(cfg.text_or("quantile", "exact"));
    ec.seed = cfg.integer("seed");
    ec.execution = parse_execution(cfg);
    ec.validate();
    const auto dir = output_dir(cfg);
    return [ec = std::move(ec), dir](std::ostream& out, std::ostream& err) {
        const ExperimentReport report = run_selection_experiment(ec);
        if (report.failed_tasks > 0) {
            err << "note: " << report.failed_tasks << " of " << report.total_tasks
                << " (replication, m) tasks failed and were excluded\n";
        }
        write_file(dir / "experiment.csv", [&](std::ostream& f) { write_metrics_csv(f, report.rows); });
        out << "wrote " << (dir / "experiment.csv").string() << '\n';
    };
}

Job plan_lambda_sweep(const RunConfig& cfg) {
    cfg.reject_unknown(merged({&kCommonKeys, &kDgpKeys}, {"n", "reps", "lambdas", "penalties"}));
    ExperimentConfig ec{.dgp = build_dgp(cfg)};
    ec.pool_size = cfg.count("K");
    ec.schedule = {cfg.count("n")};
    ec.macro_reps = cfg.count("reps");
    ec.policies = {PolicySpec{}};
    ec.seed = cfg.integer("seed");
    ec.execution = parse_execution(cfg);
    ec.validate();
    std::vector<Penalty> penalties;
    const auto names = cfg.has("penalties") ? cfg.words("penalties")
                                            : std::vector<std::string>{"pairwise", "group_mean"};
    for (const auto& name : names) penalties.push_back(parse_penalty(name));
    std::vector<double> lambdas = cfg.reals("lambdas");
    for (double lambda : lambdas) {
        if (lambda < 0.0) throw ConfigError("lambdas must be >= 0");
    }
    const auto dir = output_dir(cfg);
    return [ec = std::move(ec), penalties, lambdas, dir](std::ostream& out, std::ostream&) {
        const auto rows = run_lambda_sweep(ec, penalties, lambdas);
        write_file(dir / "lambda_sweep.csv", [&](std::ostream& f) { write_sweep_csv(f, rows); });
        out << "wrote " << (dir / "lambda_sweep.csv").string() << '\n';
    };
}

Job plan_rates(const RunConfig& cfg) {
    cfg.reject_unknown(merged({&kCommonKeys, &kDgpKeys}, {"n_schedule", "reps", "quantile"}));
    const DataGeneratingProcess dgp = build_dgp(cfg);
    const std::size_t k = cfg.count("K");
    const auto schedule = cfg.counts("n_schedule");
    const std::size_t reps = cfg.count("reps");
    const std::uint64_t seed = cfg.integer("seed");
    const QuantileMode mode = parse_quantile(cfg.text_or("quantile", "exact"));
    const ExecutionMode execution = parse_execution(cfg);
    for (std::size_t j = 1; j < schedule.size(); ++j) {
        if (schedule[j] <= schedule[j - 1]) throw ConfigError("n_schedule must be strictly increasing");
    }
    if (k < 1 || reps < 1) throw ConfigError("K and reps must be at least 1");
    const auto dir = output_dir(cfg);
    return [=](std::ostream& out, std::ostream& err) {
        const RateReport report = estimate_deviation_rate(dgp, k, schedule, reps, seed, mode, execution);
        for (const auto& row : report.rows) {
            if (row.p_deviation == 0.0) err << "note: no deviations at n=" << row.n << "; excluded from the slope fit\n";
        }
        write_file(dir / "rates.csv", [&](std::ostream& f) { write_rates_csv(f, report); });
        write_file(dir / "rates_slope.csv", [&](std::ostream& f) { write_rates_slope_csv(f, report); });
        out << "wrote " << (dir / "rates.csv").string() << " and " << (dir / "rates_slope.csv").string() << '\n';
    };
}

Job plan_prop1(const RunConfig& cfg) {
    cfg.reject_unknown(merged({&kCommonKeys}, {"p", "rho", "tau0", "tau1", "K_schedule", "reps"}));
    ExtremeValueParams params;
    params.dimension = cfg.count_or("p", 10);
    params.rho = cfg.real_or("rho", 0.15);
    params.tau0 = cfg.real_or("tau0", 1.0);
    params.tau1 = cfg.real_or("tau1", 0.5);
    const auto ks = cfg.counts("K_schedule");
    const std::size_t reps = cfg.count("reps");
    const std::uint64_t seed = cfg.integer("seed");
    const ExecutionMode execution = parse_execution(cfg);
    if (reps < 1) throw ConfigError("reps must be at least 1");
    const auto dir = output_dir(cfg);
    return [=](std::ostream& out, std::ostream&) {
        const auto rows = run_extreme_value_study(params, ks, reps, seed, execution);
        write_file(dir / "prop1.csv", [&](std::ostream& f) { write_extreme_value_csv(f, rows); });
        out << "wrote " << (dir / "prop1.csv").string() << '\n';
    };
}

Job plan_counterexample(const RunConfig& cfg) {
    cfg.reject_unknown(merged({&kCommonKeys}, {"samples"}));
    const std::size_t samples = cfg.count_or("samples", 1000000);
    const std::uint64_t seed = cfg.integer("seed");
    const ExecutionMode execution = parse_execution(cfg);
    if (samples < 10000) throw ConfigError("samples must be at least 10000");
    const auto dir = output_dir(cfg);
    return [=](std::ostream& out, std::ostream&) {
        const CounterexampleRecord rec = verify_counterexample(samples, seed, execution);
        write_file(dir / "counterexample.csv", [&](std::ostream& f) { write_counterexample_csv(f, rec); });
        out << "wrote " << (dir / "counterexample.csv").string() << '\n';
    };
}

int run_ingest(const std::string& path, bool validate_only, std::ostream& out, std::ostream& err) {
    try {
        const PopulationTable table = read_population_csv(path);
        if (validate_only) {
            out << "valid: " << table.size() << " records\n";
            return kExitOk;
        }
        const PopulationSummary s = summarize(table);
        out << "N," << s.size << '\n'
            << "p," << s.dimension << '\n'
            << "n0," << s.n0 << '\n'
            << "n1," << s.n1 << '\n'
            << "mean_y0," << format_number(s.mean_y0) << '\n'
            << "mean_y1," << format_number(s.mean_y1) << '\n'
            << "disparity," << format_number(s.disparity()) << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << path << ": " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Statistically fair candidate selection: studies and data tools", "fairsel"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Run configuration (key = value lines)");
    app.add_option("--seed", flags.seed, "Master seed; overrides the config key");
    app.add_option("--out", flags.out_dir, "Output directory; overrides the config key");
    app.add_option("--threads", flags.threads, "OpenMP worker threads")->check(CLI::NonNegativeNumber);
    app.add_option("--quantile", flags.quantile, "exact or bootstrap:REPS");

    std::string csv_path;
    bool validate_only = false;
    auto* ingest = app.add_subcommand("ingest", "Validate and summarize a population CSV");
    ingest->add_option("csv", csv_path, "Population CSV (x1..xp,z,y)")->required();
    ingest->add_flag("--validate-only", validate_only, "Only check the file");

    using Planner = Job (*)(const RunConfig&);
    const std::vector<std::pair<CLI::App*, Planner>> studies = {
        {app.add_subcommand("experiment", "Performance and parity curves over m"), plan_experiment},
        {app.add_subcommand("lambda-sweep", "Penalized benchmarks across lambda"), plan_lambda_sweep},
        {app.add_subcommand("rates", "Deviation probability of the empirical fair policy"), plan_rates},
        {app.add_subcommand("prop1", "Minority selection frequency of the argmax policy"), plan_prop1},
        {app.add_subcommand("counterexample", "Monte Carlo check of the percentile-policy gap"),
         plan_counterexample},
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (ingest->parsed()) return run_ingest(csv_path, validate_only, out, err);

    Job job;
    try {
        RunConfig cfg = flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
        if (!flags.seed.empty()) cfg.set("seed", flags.seed);
        if (!flags.out_dir.empty()) cfg.set("out", flags.out_dir);
        if (!flags.quantile.empty()) cfg.set("quantile", flags.quantile);
        if (flags.threads > 0) cfg.set("threads", std::to_string(flags.threads));
        const std::size_t threads = cfg.count_or("threads", 0);
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
#else
        (void)threads;
#endif
        for (const auto& [sub, plan] : studies) {
            if (sub->parsed()) job = plan(cfg);
        }
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        job(out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace fairsel
