#pragma once

// Domain types and samplers for the hiring model: a data-generating process
// for (X, Z, Y), historical training data and pools of new candidates.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fairsel/rng.hpp"

namespace fairsel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Protected-attribute indicators, one 0/1 entry per record.
using GroupLabels = std::vector<int>;

/// Writable view of one matrix row (strided in column-major storage).
using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

/// Finite population with observed responses, used as a data-generating law.
struct PopulationTable {
    Matrix features;  // N x p
    GroupLabels z;
    Vector y;

    std::size_t size() const noexcept { return z.size(); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(features.cols()); }
    std::size_t count(int group) const noexcept;

    /// Throws ParameterError / MissingSubgroupError when the table is unusable
    /// (N < 2, inconsistent shapes, non-binary z, or an empty subgroup).
    void validate() const;
};

/// Training triple (X_n, Z_n, Y_n).
class HistoryDataset {
public:
    HistoryDataset(Matrix features, GroupLabels z, Vector y);

    const Matrix& features() const noexcept { return features_; }
    const GroupLabels& z() const noexcept { return z_; }
    const Vector& y() const noexcept { return y_; }

    std::size_t size() const noexcept { return z_.size(); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    std::size_t n0() const noexcept { return n0_; }
    std::size_t n1() const noexcept { return n1_; }

    /// First m records, in order.
    HistoryDataset prefix(std::size_t m) const;

private:
    Matrix features_;
    GroupLabels z_;
    Vector y_;
    std::size_t n0_ = 0;
    std::size_t n1_ = 0;
};

/// The K applicants a single decision is made over. Responses are unobserved.
class CandidatePool {
public:
    CandidatePool(Matrix features, GroupLabels z);

    const Matrix& features() const noexcept { return features_; }
    const GroupLabels& z() const noexcept { return z_; }

    std::size_t size() const noexcept { return z_.size(); }
    std::size_t count(int group) const noexcept { return group == 1 ? k1_ : k0_; }
    bool mixed() const noexcept { return k0_ > 0 && k1_ > 0; }

private:
    Matrix features_;
    GroupLabels z_;
    std::size_t k0_ = 0;
    std::size_t k1_ = 0;
};

enum class DgpKind { SyntheticGaussian, EmpiricalBootstrap };

/// Sampler for (X, Z) and responses Y.
///
/// SyntheticGaussian: Z ~ Bernoulli(rho), X | Z=z ~ N(mean_z, C_z) with
/// C_z = tau_z A_z A_z^T, Y = beta^T X + noise_sd * eps.
/// EmpiricalBootstrap: whole rows (X, Z, Y) drawn uniformly from a population.
///
/// Immutable once built; share freely across threads.
class DataGeneratingProcess {
public:
    DgpKind kind() const noexcept { return kind_; }
    double rho() const noexcept { return rho_; }
    std::size_t dimension() const noexcept;

    // Synthetic fields.
    const Vector& beta() const noexcept { return beta_; }
    double noise_sd() const noexcept { return noise_sd_; }
    double tau(int group) const noexcept { return group == 1 ? tau1_ : tau0_; }
    const Matrix& cov_factor(int group) const noexcept { return group == 1 ? factor1_ : factor0_; }
    const Matrix& covariance(int group) const noexcept { return group == 1 ? cov1_ : cov0_; }
    const Vector& mean(int group) const noexcept { return group == 1 ? mean1_ : mean0_; }

    // Empirical fields. Null for synthetic processes.
    const PopulationTable* population() const noexcept { return population_.get(); }

    /// Builds a synthetic process from explicit parameters.
    static DataGeneratingProcess synthetic(double rho, Vector beta, double noise_sd, double tau0,
                                           double tau1, Matrix factor0, Matrix factor1,
                                           std::optional<Vector> mean0 = std::nullopt,
                                           std::optional<Vector> mean1 = std::nullopt);

    static DataGeneratingProcess empirical(PopulationTable population);

    /// One (X, Z) draw written into `row`; returns Z. For empirical processes
    /// `population_row` receives the index of the drawn row.
    int sample_features(RngStream& rng, RowRef row,
                        std::size_t* population_row = nullptr) const;

private:
    DataGeneratingProcess() = default;

    DgpKind kind_ = DgpKind::SyntheticGaussian;
    double rho_ = 0.5;
    Vector beta_;
    double noise_sd_ = 0.0;
    double tau0_ = 1.0;
    double tau1_ = 1.0;
    Matrix factor0_, factor1_;
    Matrix cov0_, cov1_;
    Matrix chol0_, chol1_;  // lower Cholesky factors of C_z (jittered when needed)
    Vector mean0_, mean1_;
    std::shared_ptr<const PopulationTable> population_;
};

/// Draws beta ~ N(0, I_p) and A_z with iid N(0,1) entries once from `seed`.
/// With `shared_factor` the same A is used for both subgroups, so the two
/// feature laws differ only through tau_z.
DataGeneratingProcess make_synthetic_dgp(std::size_t p, double rho, double tau0, double tau1,
                                         double noise_sd, std::uint64_t seed,
                                         bool shared_factor = false);

HistoryDataset sample_history(const DataGeneratingProcess& dgp, std::size_t n, RngStream& rng);

CandidatePool sample_pool(const DataGeneratingProcess& dgp, std::size_t k, RngStream& rng);

/// Pool together with each candidate's realized performance: beta^T X for
/// synthetic processes, the recorded y of the drawn row for empirical ones.
struct ScoredPool {
    CandidatePool pool;
    Vector performance;
};

ScoredPool sample_scored_pool(const DataGeneratingProcess& dgp, std::size_t k, RngStream& rng);

}  // namespace fairsel
