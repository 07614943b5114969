#pragma once

// Selection policies over a candidate pool. Every policy breaks ties in
// favor of the lowest candidate index.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "fairsel/core_model.hpp"
#include "fairsel/estimation.hpp"
#include "fairsel/score_law.hpp"

namespace fairsel {

struct PolicyDecision {
    std::size_t selected_index = 0;
    int selected_subgroup = 0;
    std::optional<double> r_hat_0;  // best group-0 score; absent if no group-0 candidate
    std::optional<double> r_hat_1;
    std::optional<double> threshold;
    std::vector<double> scores;  // per-candidate ranking values
};

/// Known coefficients and subgroup score laws F_z.
struct IdealModel {
    Vector beta;
    ScoreLaw law0;
    ScoreLaw law1;

    const ScoreLaw& law(int group) const noexcept { return group == 1 ? law1 : law0; }
};

/// Gaussian laws N(beta^T mu_z, beta^T C_z beta) for synthetic processes; for
/// populations, beta is the OLS fit on the whole table and F_z the finite law
/// of the fitted scores within subgroup z.
IdealModel ideal_model_from_dgp(const DataGeneratingProcess& dgp);

struct AnalyticGrid {};
struct ExactFinite {};
struct MonteCarlo {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
};
using QuantileMethod = std::variant<AnalyticGrid, ExactFinite, MonteCarlo>;

/// ExactFinite when both laws are finite, AnalyticGrid otherwise.
QuantileMethod default_method(const IdealModel& model);

/// Grid resolution and stopping tolerance of the AnalyticGrid method.
inline constexpr std::size_t kGridIntervals = 4096;
inline constexpr double kBisectionTolerance = 1e-8;

/// q(Z): the K0/K-quantile of R1 - R0 under the true laws.
double ideal_quantile(const IdealModel& model, std::size_t k0, std::size_t k1,
                      const QuantileMethod& method);

/// P(R1 - R0 <= t) under the true laws, by quadrature over the law of R0.
double ideal_difference_cdf(const IdealModel& model, std::size_t k0, std::size_t k1, double t);

/// Precomputed q(Z) for every mixed composition of a pool of size K.
class IdealThresholds {
public:
    IdealThresholds(const IdealModel& model, std::size_t k, const QuantileMethod& method);
    double operator()(std::size_t k0, std::size_t k1) const;
    std::size_t pool_size() const noexcept { return k_; }

private:
    std::size_t k_;
    std::vector<double> by_k1_;  // index K1 in [1, K-1]
};

PolicyDecision policy_parity_of_treatment(const Vector& beta, const CandidatePool& pool);

/// Ranks by within-subgroup percentile U = F_Z(beta^T X) under the true laws.
PolicyDecision policy_fair_prediction(const IdealModel& model, const CandidatePool& pool);

/// Plug-in ranking by F_hat_Z(beta_hat^T X).
PolicyDecision policy_fair_prediction(const FittedSelector& selector, const CandidatePool& pool);

PolicyDecision policy_ideal_fair(const IdealModel& model, const CandidatePool& pool,
                                 const QuantileMethod& method);
PolicyDecision policy_ideal_fair(const IdealModel& model, const CandidatePool& pool);
PolicyDecision policy_ideal_fair(const IdealModel& model, const IdealThresholds& thresholds,
                                 const CandidatePool& pool);

struct QuantileMode {
    enum class Kind { Exact, Bootstrap };
    Kind kind = Kind::Exact;
    std::size_t reps = 0;

    static QuantileMode exact() { return {}; }
    static QuantileMode bootstrap(std::size_t reps) { return {Kind::Bootstrap, reps}; }
};

PolicyDecision policy_empirical_fair(const FittedSelector& selector, const CandidatePool& pool);
PolicyDecision policy_empirical_fair(const FittedSelector& selector, const CandidatePool& pool,
                                     QuantileMode mode, RngStream& rng);

enum class Penalty { PairwiseWeighted, GroupMeanResidual };

/// Weights exp(-(y - y')^2) below this are treated as zero.
inline constexpr double kPairWeightCutoff = 1e-5;

/// The penalized problem min ||Y - X theta||^2 + lambda L(theta) reduces to
/// (gram + lambda * penalty_matrix) theta = xty + lambda * penalty_rhs.
struct PenalizedSystem {
    Matrix gram;
    Vector xty;
    Matrix penalty_matrix;
    Vector penalty_rhs;

    Vector solve(double lambda) const;
};

PenalizedSystem penalized_system(const HistoryDataset& history, Penalty penalty);

/// sum over (Z_m=1, Z_m'=0) of w(Y_m, Y_m') (X_m - X_m')(X_m - X_m')^T / (n1 n0).
Matrix pairwise_penalty_matrix(const HistoryDataset& history);

Vector penalized_fit(const HistoryDataset& history, Penalty penalty, double lambda);

PolicyDecision policy_penalized(const Vector& theta, const CandidatePool& pool);

}  // namespace fairsel
