#include "fairsel/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fairsel/error.hpp"
#include "fairsel/quantile_kernels.hpp"

namespace fairsel {

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end());
}

std::size_t EmpiricalCdf::count_at_most(double r) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(samples_.begin(), samples_.end(), r) -
                                    samples_.begin());
}

double EmpiricalCdf::operator()(double r) const noexcept {
    if (samples_.empty()) return 0.0;
    return static_cast<double>(count_at_most(r)) / static_cast<double>(samples_.size());
}

double cdf_eval(const EmpiricalCdf& cdf, double r) { return cdf(r); }

Vector solve_normal_equations(const Matrix& gram, const Vector& rhs) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SingularDesignError("eigen decomposition failed");
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCondition) {
        throw SingularDesignError("normal equations are singular (condition number " +
                                  std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");
    }
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularDesignError("Cholesky factorization failed");
    return llt.solve(rhs);
}

Vector ols_fit(const HistoryDataset& history) {
    const Matrix& x = history.features();
    if (history.size() < history.dimension()) {
        throw SingularDesignError("fewer records (" + std::to_string(history.size()) +
                                  ") than features (" + std::to_string(history.dimension()) + ")");
    }
    Matrix gram = Matrix::Zero(x.cols(), x.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    return solve_normal_equations(gram, x.transpose() * history.y());
}

FittedSelector::FittedSelector(Vector beta_hat, std::vector<double> scores0,
                               std::vector<double> scores1)
    : beta_hat_(std::move(beta_hat)), cdf0_(std::move(scores0)), cdf1_(std::move(scores1)) {
    if (cdf0_.size() == 0 || cdf1_.size() == 0) {
        throw MissingSubgroupError("history must contain both subgroups to fit the selector");
    }
    const auto asc = cdf1_.sorted_samples();
    scores1_desc_.assign(asc.rbegin(), asc.rend());
}

FittedSelector fit_selector(const HistoryDataset& history, Vector beta_hat) {
    if (history.n0() == 0 || history.n1() == 0) {
        throw MissingSubgroupError("history must contain both subgroups to fit the selector");
    }
    const Vector scores = history.features() * beta_hat;
    std::vector<double> s0;
    std::vector<double> s1;
    s0.reserve(history.n0());
    s1.reserve(history.n1());
    for (std::size_t m = 0; m < history.size(); ++m) {
        (history.z()[m] == 1 ? s1 : s0).push_back(scores[static_cast<Eigen::Index>(m)]);
    }
    return FittedSelector(std::move(beta_hat), std::move(s0), std::move(s1));
}

FittedSelector fit_selector(const HistoryDataset& history) {
    if (history.n0() == 0 || history.n1() == 0) {
        throw MissingSubgroupError("history must contain both subgroups to fit the selector");
    }
    return fit_selector(history, ols_fit(history));
}

double that_eval(const FittedSelector& selector, std::size_t k0, std::size_t k1, double t) {
    if (k0 < 1 || k1 < 1) throw ParameterError("K0 and K1 must both be at least 1");
    const auto s0 = selector.scores_z0_asc();
    const EmpiricalCdf& f0 = selector.cdf(0);
    const EmpiricalCdf& f1 = selector.cdf(1);
    double sum = 0.0;
    for (double s : s0) {
        sum += std::pow(f1(s + t), static_cast<double>(k1)) *
               std::pow(f0(s), static_cast<double>(k0 - 1));
    }
    return sum / static_cast<double>(s0.size()) - 1.0 / static_cast<double>(k0 + k1);
}

double that_root(const FittedSelector& selector, std::size_t k0, std::size_t k1) {
    return kernels::frontier_walk_min(selector.scores_z1_asc(), selector.scores_z0_asc(),
                                      [&](double t) { return that_eval(selector, k0, k1, t) >= 0.0; });
}

double exact_quantile(const FittedSelector& selector, std::size_t k0, std::size_t k1) {
    const kernels::MaxDifferenceLaw law(selector.scores_z1_asc(), selector.scores_z0_asc(), k0, k1);
    return kernels::quantile_pruned_search(law);
}

std::size_t quantile_rank(std::size_t reps, std::size_t k0, std::size_t k1) {
    const std::size_t k = k0 + k1;
    const std::size_t needed = (reps * k0 + k - 1) / k;  // ceil(reps * K0 / K)
    return needed == 0 ? 0 : needed - 1;
}

double sampled_difference_quantile(std::span<const double> s1, std::span<const double> s0,
                                   std::size_t k0, std::size_t k1, std::size_t reps,
                                   RngStream& rng) {
    if (s0.empty() || s1.empty()) {
        throw MissingSubgroupError("bootstrap needs scores from both subgroups");
    }
    if (k0 < 1 || k1 < 1) throw ParameterError("K0 and K1 must both be at least 1");
    if (reps < 1) throw ParameterError("bootstrap needs at least one replication");
    std::vector<double> draws(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        double best1 = -INFINITY;
        for (std::size_t k = 0; k < k1; ++k) best1 = std::max(best1, s1[rng.index(s1.size())]);
        double best0 = -INFINITY;
        for (std::size_t k = 0; k < k0; ++k) best0 = std::max(best0, s0[rng.index(s0.size())]);
        draws[r] = best1 - best0;
    }
    const std::size_t rank = quantile_rank(reps, k0, k1);
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(rank), draws.end());
    return draws[rank];
}

double bootstrap_quantile(const FittedSelector& selector, std::size_t k0, std::size_t k1,
                          std::size_t reps, RngStream& rng) {
    return sampled_difference_quantile(selector.scores_z1_asc(), selector.scores_z0_asc(), k0, k1,
                                       reps, rng);
}

}  // namespace fairsel
