#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairsel/error.hpp"
#include "fairsel/policies.hpp"
#include "oracles.hpp"

using namespace fairsel;

namespace {

CandidatePool pool_of(std::vector<double> scores, GroupLabels z) {
    Matrix x(static_cast<Eigen::Index>(scores.size()), 1);
    for (std::size_t k = 0; k < scores.size(); ++k) x(static_cast<Eigen::Index>(k), 0) = scores[k];
    return CandidatePool(x, std::move(z));
}

Vector unit() {
    Vector b(1);
    b << 1.0;
    return b;
}

HistoryDataset random_history(RngStream& rng, Eigen::Index n, Eigen::Index p) {
    Matrix x(n, p);
    Vector y(n);
    GroupLabels z(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index j = 0; j < p; ++j) x(m, j) = rng.normal();
        z[static_cast<std::size_t>(m)] = m < 2 ? static_cast<int>(m) : (rng.bernoulli(0.4) ? 1 : 0);
        y[m] = x.row(m).sum() + 0.7 * z[static_cast<std::size_t>(m)] + rng.normal() * 0.5;
    }
    return HistoryDataset(x, z, y);
}

}  // namespace

TEST_CASE("argmax policy matches a scan and breaks ties low") {
    const auto pool = pool_of({1.0, 3.0, 3.0, 2.0}, {0, 1, 0, 1});
    const auto d = policy_parity_of_treatment(unit(), pool);
    CHECK(d.selected_index == 1);
    CHECK(d.selected_subgroup == 1);
    CHECK(*d.r_hat_0 == 3.0);
    CHECK(*d.r_hat_1 == 3.0);

    RngStream rng(1, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(1 + rng.index(12));
        GroupLabels z(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k] = static_cast<double>(rng.index(5));
            z[k] = rng.bernoulli(0.5) ? 1 : 0;
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.size(); ++k) {
            if (s[k] > s[best]) best = k;
        }
        CHECK(policy_parity_of_treatment(unit(), pool_of(s, z)).selected_index == best);
    }
}

TEST_CASE("ideal quantile for single draws is the median of the difference") {
    const IdealModel model{unit(), ScoreLaw::gaussian(0.3, 1.0), ScoreLaw::gaussian(1.1, 2.0)};
    CHECK(ideal_quantile(model, 1, 1, AnalyticGrid{}) == doctest::Approx(0.8).epsilon(1e-6));
    const IdealModel same{unit(), ScoreLaw::gaussian(0.0, 1.0), ScoreLaw::gaussian(0.0, 1.0)};
    CHECK(std::abs(ideal_quantile(same, 3, 3, AnalyticGrid{})) < 1e-6);
}

TEST_CASE("grid quantile sits at the K0/K level of the difference cdf") {
    const IdealModel model{unit(), ScoreLaw::gaussian(0.0, 1.0), ScoreLaw::gaussian(0.0, 0.5)};
    for (std::size_t k1 = 1; k1 < 10; ++k1) {
        const std::size_t k0 = 10 - k1;
        const double q = ideal_quantile(model, k0, k1, AnalyticGrid{});
        CHECK(ideal_difference_cdf(model, k0, k1, q) == doctest::Approx(static_cast<double>(k0) / 10.0).epsilon(1e-6));
    }
}

TEST_CASE("Monte Carlo quantile tracks the grid quantile") {
    const IdealModel model{unit(), ScoreLaw::gaussian(0.0, 1.0), ScoreLaw::gaussian(0.2, 0.5)};
    const double grid = ideal_quantile(model, 6, 2, AnalyticGrid{});
    const double mc = ideal_quantile(model, 6, 2, MonteCarlo{400000, 3});
    CHECK(mc == doctest::Approx(grid).epsilon(0.01));
}

TEST_CASE("finite laws: exact quantile equals the convolution oracle") {
    RngStream rng(2, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a0(1 + rng.index(15));
        std::vector<double> a1(1 + rng.index(15));
        for (auto& v : a0) v = static_cast<double>(rng.index(10)) * 0.5;
        for (auto& v : a1) v = static_cast<double>(rng.index(10)) * 0.5;
        const IdealModel model{unit(), ScoreLaw::finite(a0), ScoreLaw::finite(a1)};
        const std::size_t k = 2 + rng.index(6);
        const std::size_t k1 = 1 + rng.index(k - 1);
        const double exact = ideal_quantile(model, k - k1, k1, ExactFinite{});
        CHECK(exact == oracle::convolution_quantile(a0, a1, k - k1, k1));
        CHECK(ideal_quantile(model, k - k1, k1, AnalyticGrid{}) == doctest::Approx(exact).epsilon(1e-7));
    }
}

TEST_CASE("point-mass laws") {
    const IdealModel model{unit(), ScoreLaw::gaussian(1.0, 0.0), ScoreLaw::gaussian(2.5, 0.0)};
    CHECK(model.law0.is_finite());
    CHECK(ideal_quantile(model, 2, 3, AnalyticGrid{}) == 1.5);
    CHECK(ideal_quantile(model, 2, 3, ExactFinite{}) == 1.5);
}

TEST_CASE("ideal fair policy: threshold decides between the subgroup leaders") {
    const IdealModel model{unit(), ScoreLaw::gaussian(0.0, 1.0), ScoreLaw::gaussian(0.0, 1.0)};
    const IdealThresholds table(model, 2, AnalyticGrid{});
    CHECK(std::abs(table(1, 1)) < 1e-6);
    CHECK(policy_ideal_fair(model, table, pool_of({0.4, 0.5}, {0, 1})).selected_index == 1);
    CHECK(policy_ideal_fair(model, table, pool_of({0.5, 0.4}, {0, 1})).selected_index == 0);
    // Single-group pools fall back to the argmax.
    CHECK(policy_ideal_fair(model, table, pool_of({0.5, 0.9}, {1, 1})).selected_index == 1);
    CHECK_THROWS_AS(table(2, 1), ParameterError);
}

TEST_CASE("ideal fair policy selects subgroup z with probability K_z / K") {
    const IdealModel model{unit(), ScoreLaw::gaussian(1.0, 1.0), ScoreLaw::gaussian(0.0, 0.5)};
    const IdealThresholds table(model, 4, AnalyticGrid{});
    RngStream rng(3, 0, StreamPurpose::Test);
    const GroupLabels z{0, 1, 1, 0};
    int ones = 0;
    const int trials = 40000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> s(4);
        for (std::size_t k = 0; k < 4; ++k) s[k] = model.law(z[k]).sample(rng);
        ones += policy_ideal_fair(model, table, pool_of(s, z)).selected_subgroup;
    }
    CHECK(static_cast<double>(ones) / trials == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("fair prediction ranks by within-group percentile") {
    const IdealModel model{unit(), ScoreLaw::uniform(0.0, 1.0), ScoreLaw::uniform(0.0, 4.0)};
    // Percentiles: 0.6 for candidate 0 and 0.5 for candidate 1.
    const auto d = policy_fair_prediction(model, pool_of({0.6, 2.0}, {0, 1}));
    CHECK(d.selected_index == 0);
    CHECK(d.scores[1] == doctest::Approx(0.5));
}

TEST_CASE("empirical fair policy uses the exact threshold by default") {
    Vector b = unit();
    const FittedSelector sel(b, {0.0, 1.0, 2.0}, {0.5, 1.5});
    const auto pool = pool_of({1.0, 1.2}, {0, 1});
    const auto d = policy_empirical_fair(sel, pool);
    REQUIRE(d.threshold.has_value());
    CHECK(*d.threshold == exact_quantile(sel, 1, 1));
    CHECK(d.selected_index == (1.2 - 1.0 >= *d.threshold ? 1u : 0u));
}

TEST_CASE("pairwise penalty matrix matches the literal pair sum") {
    RngStream rng(4, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 20; ++trial) {
        const HistoryDataset h = random_history(rng, 40, 3);
        const Matrix m = pairwise_penalty_matrix(h);
        Matrix expected = Matrix::Zero(3, 3);
        for (std::size_t a = 0; a < h.size(); ++a) {
            for (std::size_t b = 0; b < h.size(); ++b) {
                if (h.z()[a] != 1 || h.z()[b] != 0) continue;
                const double d = h.y()[static_cast<Eigen::Index>(a)] - h.y()[static_cast<Eigen::Index>(b)];
                const double w = std::exp(-d * d);
                if (w < kPairWeightCutoff) continue;
                const Vector delta = (h.features().row(static_cast<Eigen::Index>(a)) -
                                      h.features().row(static_cast<Eigen::Index>(b)))
                                         .transpose();
                expected += w * delta * delta.transpose();
            }
        }
        expected /= static_cast<double>(h.n0() * h.n1());
        CHECK((m - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("penalized fits are stationary points of the raw objective") {
    RngStream rng(5, 0, StreamPurpose::Test);
    for (double lambda : {0.01, 1.0, 100.0}) {
        const HistoryDataset h = random_history(rng, 30, 3);
        const Vector a = penalized_fit(h, Penalty::PairwiseWeighted, lambda);
        CHECK(oracle::pairwise_objective_gradient(h.features(), h.z(), h.y(), a, lambda, kPairWeightCutoff).norm() < 1e-8);
        const Vector b = penalized_fit(h, Penalty::GroupMeanResidual, lambda);
        CHECK(oracle::group_mean_objective_gradient(h.features(), h.z(), h.y(), b, lambda).norm() < 1e-8);
    }
}

TEST_CASE("lambda = 0 is OLS and large lambda closes the residual gap") {
    RngStream rng(6, 0, StreamPurpose::Test);
    const HistoryDataset h = random_history(rng, 60, 3);
    const Vector ols = ols_fit(h);
    CHECK((penalized_fit(h, Penalty::PairwiseWeighted, 0.0) - ols).norm() == 0.0);
    CHECK((penalized_fit(h, Penalty::GroupMeanResidual, 0.0) - ols).norm() == 0.0);

    const Vector theta = penalized_fit(h, Penalty::GroupMeanResidual, 1e8);
    double r[2] = {0, 0};
    for (std::size_t m = 0; m < h.size(); ++m) {
        const auto i = static_cast<Eigen::Index>(m);
        r[h.z()[m]] += h.y()[i] - h.features().row(i).dot(theta);
    }
    const double gap = r[1] / static_cast<double>(h.n1()) - r[0] / static_cast<double>(h.n0());
    CHECK(std::abs(gap) < 1e-5);
    CHECK_THROWS_AS(penalized_fit(h, Penalty::GroupMeanResidual, -1.0), ParameterError);
}
