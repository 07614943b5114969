#pragma once

// Plug-in estimators for the empirical fair policy: OLS coefficients,
// per-subgroup empirical score CDFs, and the estimated threshold q_hat.

#include <cstddef>
#include <span>
#include <vector>

#include "fairsel/core_model.hpp"

namespace fairsel {

/// Right-continuous empirical CDF of a multiset of reals.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples);

    /// Fraction of samples <= r.
    double operator()(double r) const noexcept;
    std::size_t count_at_most(double r) const noexcept;

    std::span<const double> sorted_samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<double> samples_;
};

double cdf_eval(const EmpiricalCdf& cdf, double r);

/// Condition-number limit for the normal-equation matrix.
inline constexpr double kMaxCondition = 1e12;

/// Solves gram * x = rhs for symmetric positive definite gram; throws
/// SingularDesignError when cond(gram) exceeds kMaxCondition.
Vector solve_normal_equations(const Matrix& gram, const Vector& rhs);

/// beta_hat = (X^T X)^{-1} X^T Y. Requires n >= p.
Vector ols_fit(const HistoryDataset& history);

/// OLS coefficients plus the per-subgroup historical score tables.
class FittedSelector {
public:
    /// Throws MissingSubgroupError if either score list is empty.
    FittedSelector(Vector beta_hat, std::vector<double> scores0, std::vector<double> scores1);

    const Vector& beta_hat() const noexcept { return beta_hat_; }
    /// Group-1 scores, descending.
    const std::vector<double>& scores_z1_desc() const noexcept { return scores1_desc_; }
    /// Group-0 scores, ascending.
    std::span<const double> scores_z0_asc() const noexcept { return cdf0_.sorted_samples(); }
    std::span<const double> scores_z1_asc() const noexcept { return cdf1_.sorted_samples(); }

    const EmpiricalCdf& cdf(int group) const noexcept { return group == 1 ? cdf1_ : cdf0_; }
    std::size_t n0() const noexcept { return cdf0_.size(); }
    std::size_t n1() const noexcept { return cdf1_.size(); }

private:
    Vector beta_hat_;
    EmpiricalCdf cdf0_;
    EmpiricalCdf cdf1_;
    std::vector<double> scores1_desc_;
};

FittedSelector fit_selector(const HistoryDataset& history);

/// Same, reusing coefficients already estimated from `history`.
FittedSelector fit_selector(const HistoryDataset& history, Vector beta_hat);

/// T_hat(t) = (1/n0) sum_{m: Z_m=0} F1(s_m + t)^K1 F0(s_m)^(K0-1) - 1/K,
/// evaluated literally with the empirical CDFs. Requires K0, K1 >= 1.
double that_eval(const FittedSelector& selector, std::size_t k0, std::size_t k1, double t);

/// Smallest entry t of the score-difference matrix with T_hat(t) >= 0.
double that_root(const FittedSelector& selector, std::size_t k0, std::size_t k1);

/// Exact K0/K-quantile of R1 - R0, where R_z is the max of K_z scores
/// resampled with replacement from subgroup z: the smallest support point
/// t with P(R1 - R0 <= t) >= K0/K.
double exact_quantile(const FittedSelector& selector, std::size_t k0, std::size_t k1);

/// Same quantile estimated from `reps` bootstrap draws of R1 - R0.
double bootstrap_quantile(const FittedSelector& selector, std::size_t k0, std::size_t k1,
                          std::size_t reps, RngStream& rng);

/// Bootstrap quantile of R1 - R0 for raw ascending score lists; shared with
/// the Monte Carlo ideal quantile.
double sampled_difference_quantile(std::span<const double> s1, std::span<const double> s0,
                                   std::size_t k0, std::size_t k1, std::size_t reps,
                                   RngStream& rng);

/// Index of the smallest sample value whose cumulative fraction reaches
/// k0/(k0+k1) among `reps` sorted draws.
std::size_t quantile_rank(std::size_t reps, std::size_t k0, std::size_t k1);

}  // namespace fairsel
