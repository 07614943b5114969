#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "fairsel/error.hpp"
#include "fairsel/estimation.hpp"
#include "fairsel/quantile_kernels.hpp"
#include "oracles.hpp"

using namespace fairsel;

namespace {

// Scores on a coarse grid so ties are common.
std::vector<double> grid_scores(RngStream& rng, std::size_t n, int levels) {
    std::vector<double> v(n);
    for (auto& s : v) s = static_cast<double>(rng.index(static_cast<std::size_t>(levels))) * 0.25 - 1.0;
    return v;
}

std::vector<double> smooth_scores(RngStream& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& s : v) s = rng.normal();
    return v;
}

FittedSelector selector_from(const std::vector<double>& s0, const std::vector<double>& s1) {
    Vector b(1);
    b << 1.0;
    return FittedSelector(b, s0, s1);
}

}  // namespace

TEST_CASE("empirical cdf counts ties on the right") {
    const EmpiricalCdf f({3.0, 1.0, 2.0, 2.0});
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == 0.25);
    CHECK(f(2.0) == 0.75);
    CHECK(f(10.0) == 1.0);
    CHECK(f.count_at_most(2.5) == 3);
    CHECK(cdf_eval(f, 3.0) == 1.0);
}

TEST_CASE("OLS agrees with Cramer's rule") {
    RngStream rng(1, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.index(3));
        const Eigen::Index n = p + 2 + static_cast<Eigen::Index>(rng.index(20));
        Matrix x(n, p);
        Vector y(n);
        GroupLabels z(static_cast<std::size_t>(n));
        for (Eigen::Index m = 0; m < n; ++m) {
            for (Eigen::Index j = 0; j < p; ++j) x(m, j) = rng.normal();
            y[m] = rng.normal() * 3.0;
            z[static_cast<std::size_t>(m)] = static_cast<int>(m % 2);
        }
        const Vector beta = ols_fit(HistoryDataset(x, z, y));
        const auto expected = oracle::cramer_ols(x, y);
        for (Eigen::Index j = 0; j < p; ++j) {
            CHECK(beta[j] == doctest::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-9));
        }
    }
}

TEST_CASE("OLS recovers beta exactly without noise") {
    RngStream rng(2, 0, StreamPurpose::Test);
    Matrix x(50, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Vector beta(4);
    beta << 1.0, -2.0, 0.5, 3.0;
    const Vector y = x * beta;
    GroupLabels z(50, 0);
    z[0] = 1;
    CHECK((ols_fit(HistoryDataset(x, z, y)) - beta).norm() < 1e-12);
}

TEST_CASE("degenerate designs are rejected") {
    Matrix x(5, 2);
    x.col(0) << 1, 2, 3, 4, 5;
    x.col(1) = 2.0 * x.col(0);
    const HistoryDataset collinear(x, {0, 1, 0, 1, 0}, Vector::Ones(5));
    CHECK_THROWS_AS(ols_fit(collinear), SingularDesignError);

    Matrix wide(2, 3);
    wide.setRandom();
    CHECK_THROWS_AS(ols_fit(HistoryDataset(wide, {0, 1}, Vector::Ones(2))), SingularDesignError);

    Matrix x2(3, 1);
    x2 << 1, 2, 3;
    CHECK_THROWS_AS(fit_selector(HistoryDataset(x2, {0, 0, 0}, Vector::Ones(3))), MissingSubgroupError);
}

TEST_CASE("T_hat matches the literal double loop") {
    RngStream rng(3, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s0 = grid_scores(rng, 1 + rng.index(12), 9);
        const auto s1 = grid_scores(rng, 1 + rng.index(12), 9);
        const std::size_t k0 = 1 + rng.index(4);
        const std::size_t k1 = 1 + rng.index(4);
        const auto sel = selector_from(s0, s1);
        for (double t = -2.5; t <= 2.5; t += 0.125) {
            CHECK(that_eval(sel, k0, k1, t) == doctest::Approx(oracle::that_literal(s0, s1, k0, k1, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("T_hat root is the smallest nonnegative entry and equals the exact quantile for K0 = 1") {
    RngStream rng(4, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s0 = grid_scores(rng, 1 + rng.index(10), 7);
        const auto s1 = grid_scores(rng, 1 + rng.index(10), 7);
        const std::size_t k0 = 1 + rng.index(3);
        const std::size_t k1 = 1 + rng.index(3);
        const auto sel = selector_from(s0, s1);
        double brute = INFINITY;
        for (double a : s1) {
            for (double b : s0) {
                if (oracle::that_literal(s0, s1, k0, k1, a - b) >= 0.0) brute = std::min(brute, a - b);
            }
        }
        CHECK(that_root(sel, k0, k1) == brute);
        if (k0 == 1) CHECK(that_root(sel, 1, k1) == exact_quantile(sel, 1, k1));
    }
}

TEST_CASE("exact quantile equals the exhaustive convolution") {
    RngStream rng(5, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n0 = 1 + rng.index(25);
        const std::size_t n1 = 1 + rng.index(25);
        const bool ties = trial % 2 == 0;
        const auto s0 = ties ? grid_scores(rng, n0, 8) : smooth_scores(rng, n0);
        const auto s1 = ties ? grid_scores(rng, n1, 8) : smooth_scores(rng, n1);
        const std::size_t k = 2 + rng.index(7);
        const std::size_t k1 = 1 + rng.index(k - 1);
        const auto sel = selector_from(s0, s1);
        CHECK(exact_quantile(sel, k - k1, k1) == oracle::convolution_quantile(s0, s1, k - k1, k1));
    }
}

TEST_CASE("frontier walk and pruned search agree, including the floating path") {
    RngStream rng(6, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n0 = 1 + rng.index(trial < 20 ? 30 : 3000);
        const std::size_t n1 = 1 + rng.index(trial < 20 ? 30 : 3000);
        auto s0 = smooth_scores(rng, n0);
        auto s1 = grid_scores(rng, n1, 40);
        std::sort(s0.begin(), s0.end());
        std::sort(s1.begin(), s1.end());
        const std::size_t k = 2 + rng.index(30);
        const std::size_t k1 = 1 + rng.index(k - 1);
        const kernels::MaxDifferenceLaw law(s1, s0, k - k1, k1);
        const double q = kernels::quantile_pruned_search(law);
        CHECK(q == kernels::quantile_frontier_walk(law));
        const double level = static_cast<double>(k - k1) / static_cast<double>(k);
        CHECK(law.cdf(q) >= level - 1e-12);
    }
}

TEST_CASE("large instances switch to floating arithmetic") {
    std::vector<double> s(500);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
    CHECK(kernels::MaxDifferenceLaw(s, s, 1, 1).exact_arithmetic());
    CHECK_FALSE(kernels::MaxDifferenceLaw(s, s, 10, 10).exact_arithmetic());
}

TEST_CASE("quantile rank is ceil(reps K0 / K) - 1") {
    CHECK(quantile_rank(10, 1, 1) == 4);
    CHECK(quantile_rank(10, 1, 2) == 3);
    CHECK(quantile_rank(1, 3, 1) == 0);
    CHECK(quantile_rank(7, 9, 1) == 6);
}

TEST_CASE("bootstrap quantile approaches the exact law") {
    RngStream rng(7, 0, StreamPurpose::Test);
    auto s0 = smooth_scores(rng, 40);
    auto s1 = smooth_scores(rng, 15);
    const auto sel = selector_from(s0, s1);
    RngStream boot(7, 1, StreamPurpose::Bootstrap);
    const double q = bootstrap_quantile(sel, 3, 2, 200000, boot);
    const kernels::MaxDifferenceLaw law(sel.scores_z1_asc(), sel.scores_z0_asc(), 3, 2);
    CHECK(law.cdf(q) == doctest::Approx(0.6).epsilon(0.02));
    CHECK_THROWS_AS(bootstrap_quantile(sel, 0, 2, 10, boot), ParameterError);
}
