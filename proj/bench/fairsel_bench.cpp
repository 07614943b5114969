// Wall-clock comparison of the reference and production paths:
//   - serial vs OpenMP replication loop of run_selection_experiment
//   - frontier walk vs pruned staircase search for the exact quantile
// Usage: fairsel_bench [reps] [threads]

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "fairsel/estimation.hpp"
#include "fairsel/experiments.hpp"
#include "fairsel/quantile_kernels.hpp"

using namespace fairsel;

namespace {

template <class Fn>
double seconds(Fn&& fn) {
    const double t0 = omp_get_wtime();
    fn();
    return omp_get_wtime() - t0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 500;
    const int threads = argc > 2 ? std::atoi(argv[2]) : omp_get_num_procs();
    omp_set_num_threads(std::max(1, threads));
    std::printf("threads=%d reps=%zu\n", std::max(1, threads), reps);

    ExperimentConfig config{.dgp = make_synthetic_dgp(10, 0.15, 1.0, 0.5, 1.0, 1)};
    config.pool_size = 10;
    config.schedule = {250, 1000};
    config.macro_reps = reps;
    config.seed = 1;
    for (const char* id : {"max", "fair", "ideal"}) config.policies.push_back(PolicySpec::parse(id));

    ExperimentReport serial_report, parallel_report;
    config.execution = ExecutionMode::Serial;
    const double serial = seconds([&] { serial_report = run_selection_experiment(config); });
    config.execution = ExecutionMode::Parallel;
    const double parallel = seconds([&] { parallel_report = run_selection_experiment(config); });
    bool same = serial_report.rows.size() == parallel_report.rows.size();
    for (std::size_t i = 0; same && i < serial_report.rows.size(); ++i) {
        same = serial_report.rows[i].mean_performance == parallel_report.rows[i].mean_performance &&
               serial_report.rows[i].parity == parallel_report.rows[i].parity;
    }
    std::printf("experiment  serial %8.3fs  parallel %8.3fs  speedup %5.2fx  identical=%s\n", serial,
                parallel, serial / parallel, same ? "yes" : "NO");

    for (std::size_t n : {200, 1000, 5000}) {
        RngStream rng(2, n, StreamPurpose::Test);
        std::vector<double> s0(n - n / 6), s1(n / 6);
        for (auto& v : s0) v = rng.normal();
        for (auto& v : s1) v = 0.7 * rng.normal();
        std::sort(s0.begin(), s0.end());
        std::sort(s1.begin(), s1.end());
        const kernels::MaxDifferenceLaw law(s1, s0, 8, 2);
        double walk_q = 0, pruned_q = 0;
        const int rounds = 20;
        const double walk = seconds([&] {
            for (int r = 0; r < rounds; ++r) walk_q = kernels::quantile_frontier_walk(law);
        });
        const double pruned = seconds([&] {
            for (int r = 0; r < rounds; ++r) pruned_q = kernels::quantile_pruned_search(law);
        });
        std::printf("quantile n=%-5zu frontier %9.3fms  pruned %9.3fms  speedup %6.1fx  equal=%s\n", n,
                    1e3 * walk / rounds, 1e3 * pruned / rounds, walk / pruned, walk_q == pruned_q ? "yes" : "NO");
    }
    return 0;
}
