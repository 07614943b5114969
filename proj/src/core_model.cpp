#include "fairsel/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

std::size_t count_group(const GroupLabels& z, int group) {
    return static_cast<std::size_t>(std::count(z.begin(), z.end(), group));
}

void check_labels(const GroupLabels& z) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] != 0 && z[i] != 1) {
            throw ParameterError("group label at index " + std::to_string(i) + " is not 0 or 1");
        }
    }
}

// Lower Cholesky factor of a PSD matrix, retrying with 1e-10 diagonal jitter.
Matrix psd_cholesky(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Matrix jittered = cov;
    jittered.diagonal().array() += 1e-10;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) {
        throw NumericError("covariance matrix is not positive semidefinite");
    }
    return llt.matrixL();
}

}  // namespace

std::size_t PopulationTable::count(int group) const noexcept { return count_group(z, group); }

void PopulationTable::validate() const {
    if (static_cast<std::size_t>(features.rows()) != z.size() ||
        static_cast<std::size_t>(y.size()) != z.size()) {
        throw ParameterError("population table has inconsistent dimensions");
    }
    if (z.size() < 2) throw ParameterError("population table needs at least two rows");
    if (features.cols() < 1) throw ParameterError("population table needs at least one feature");
    check_labels(z);
    if (!features.allFinite() || !y.allFinite()) {
        throw ParameterError("population table contains non-finite values");
    }
    if (count(0) == 0 || count(1) == 0) {
        throw MissingSubgroupError("population table must contain both subgroups");
    }
}

HistoryDataset::HistoryDataset(Matrix features, GroupLabels z, Vector y)
    : features_(std::move(features)), z_(std::move(z)), y_(std::move(y)) {
    if (z_.empty()) throw ParameterError("history must contain at least one record");
    if (static_cast<std::size_t>(features_.rows()) != z_.size() ||
        static_cast<std::size_t>(y_.size()) != z_.size()) {
        throw ParameterError("history has inconsistent dimensions");
    }
    check_labels(z_);
    n1_ = count_group(z_, 1);
    n0_ = z_.size() - n1_;
}

HistoryDataset HistoryDataset::prefix(std::size_t m) const {
    if (m < 1 || m > size()) throw ParameterError("history prefix length out of range");
    const auto rows = static_cast<Eigen::Index>(m);
    return HistoryDataset(features_.topRows(rows), GroupLabels(z_.begin(), z_.begin() + rows),
                          y_.head(rows));
}

CandidatePool::CandidatePool(Matrix features, GroupLabels z)
    : features_(std::move(features)), z_(std::move(z)) {
    if (z_.empty()) throw ParameterError("candidate pool must contain at least one candidate");
    if (static_cast<std::size_t>(features_.rows()) != z_.size()) {
        throw ParameterError("candidate pool has inconsistent dimensions");
    }
    check_labels(z_);
    k1_ = count_group(z_, 1);
    k0_ = z_.size() - k1_;
}

std::size_t DataGeneratingProcess::dimension() const noexcept {
    if (kind_ == DgpKind::EmpiricalBootstrap) return population_->dimension();
    return static_cast<std::size_t>(beta_.size());
}

DataGeneratingProcess DataGeneratingProcess::synthetic(double rho, Vector beta, double noise_sd,
                                                       double tau0, double tau1, Matrix factor0,
                                                       Matrix factor1, std::optional<Vector> mean0,
                                                       std::optional<Vector> mean1) {
    const auto p = beta.size();
    if (p < 1) throw ParameterError("dimension p must be at least 1");
    if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("rho must lie strictly inside (0, 1)");
    if (!(tau0 > 0.0) || !(tau1 > 0.0) || !std::isfinite(tau0) || !std::isfinite(tau1)) {
        throw ParameterError("tau0 and tau1 must be positive and finite");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw ParameterError("noise_sd must be nonnegative and finite");
    }
    if (factor0.rows() != p || factor1.rows() != p || factor0.cols() < 1 || factor1.cols() < 1) {
        throw ParameterError("covariance factors must have p rows");
    }
    if (!beta.allFinite() || !factor0.allFinite() || !factor1.allFinite()) {
        throw ParameterError("beta and covariance factors must be finite");
    }

    DataGeneratingProcess dgp;
    dgp.kind_ = DgpKind::SyntheticGaussian;
    dgp.rho_ = rho;
    dgp.beta_ = std::move(beta);
    dgp.noise_sd_ = noise_sd;
    dgp.tau0_ = tau0;
    dgp.tau1_ = tau1;
    dgp.factor0_ = std::move(factor0);
    dgp.factor1_ = std::move(factor1);
    dgp.cov0_ = tau0 * dgp.factor0_ * dgp.factor0_.transpose();
    dgp.cov1_ = tau1 * dgp.factor1_ * dgp.factor1_.transpose();
    dgp.chol0_ = psd_cholesky(dgp.cov0_);
    dgp.chol1_ = psd_cholesky(dgp.cov1_);
    dgp.mean0_ = mean0.value_or(Vector::Zero(p));
    dgp.mean1_ = mean1.value_or(Vector::Zero(p));
    if (dgp.mean0_.size() != p || dgp.mean1_.size() != p || !dgp.mean0_.allFinite() ||
        !dgp.mean1_.allFinite()) {
        throw ParameterError("mean vectors must be finite with length p");
    }
    return dgp;
}

DataGeneratingProcess DataGeneratingProcess::empirical(PopulationTable population) {
    population.validate();
    DataGeneratingProcess dgp;
    dgp.kind_ = DgpKind::EmpiricalBootstrap;
    dgp.rho_ = static_cast<double>(population.count(1)) / static_cast<double>(population.size());
    dgp.population_ = std::make_shared<const PopulationTable>(std::move(population));
    return dgp;
}

int DataGeneratingProcess::sample_features(RngStream& rng, RowRef row,
                                           std::size_t* population_row) const {
    if (kind_ == DgpKind::EmpiricalBootstrap) {
        const std::size_t idx = rng.index(population_->size());
        row = population_->features.row(static_cast<Eigen::Index>(idx));
        if (population_row != nullptr) *population_row = idx;
        return population_->z[idx];
    }
    const int group = rng.bernoulli(rho_) ? 1 : 0;
    const Matrix& chol = group == 1 ? chol1_ : chol0_;
    const Vector& mu = group == 1 ? mean1_ : mean0_;
    Vector xi(chol.cols());
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = rng.normal();
    row = (mu + chol.triangularView<Eigen::Lower>() * xi).transpose();
    return group;
}

DataGeneratingProcess make_synthetic_dgp(std::size_t p, double rho, double tau0, double tau1,
                                         double noise_sd, std::uint64_t seed, bool shared_factor) {
    if (p < 1) throw ParameterError("dimension p must be at least 1");
    RngStream rng(seed, 0, StreamPurpose::Dgp);
    const auto dim = static_cast<Eigen::Index>(p);
    Vector beta(dim);
    for (Eigen::Index i = 0; i < dim; ++i) beta[i] = rng.normal();
    auto draw_factor = [&] {
        Matrix a(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j)
            for (Eigen::Index i = 0; i < dim; ++i) a(i, j) = rng.normal();
        return a;
    };
    Matrix a0 = draw_factor();
    Matrix a1 = shared_factor ? a0 : draw_factor();
    return DataGeneratingProcess::synthetic(rho, std::move(beta), noise_sd, tau0, tau1,
                                            std::move(a0), std::move(a1));
}

HistoryDataset sample_history(const DataGeneratingProcess& dgp, std::size_t n, RngStream& rng) {
    if (n < 1) throw ParameterError("history size must be at least 1");
    const auto p = static_cast<Eigen::Index>(dgp.dimension());
    Matrix x(static_cast<Eigen::Index>(n), p);
    GroupLabels z(n);
    Vector y(static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < n; ++m) {
        const auto row = static_cast<Eigen::Index>(m);
        std::size_t source = 0;
        z[m] = dgp.sample_features(rng, x.row(row), &source);
        if (dgp.kind() == DgpKind::EmpiricalBootstrap) {
            y[row] = dgp.population()->y[static_cast<Eigen::Index>(source)];
        } else {
            const double eps = dgp.noise_sd() > 0.0 ? dgp.noise_sd() * rng.normal() : 0.0;
            y[row] = x.row(row).dot(dgp.beta()) + eps;
        }
    }
    return HistoryDataset(std::move(x), std::move(z), std::move(y));
}

ScoredPool sample_scored_pool(const DataGeneratingProcess& dgp, std::size_t k, RngStream& rng) {
    if (k < 1) throw ParameterError("pool size must be at least 1");
    const auto p = static_cast<Eigen::Index>(dgp.dimension());
    Matrix x(static_cast<Eigen::Index>(k), p);
    GroupLabels z(k);
    Vector performance(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        std::size_t source = 0;
        z[i] = dgp.sample_features(rng, x.row(row), &source);
        performance[row] = dgp.kind() == DgpKind::EmpiricalBootstrap
                               ? dgp.population()->y[static_cast<Eigen::Index>(source)]
                               : x.row(row).dot(dgp.beta());
    }
    return ScoredPool{CandidatePool(std::move(x), std::move(z)), std::move(performance)};
}

CandidatePool sample_pool(const DataGeneratingProcess& dgp, std::size_t k, RngStream& rng) {
    return sample_scored_pool(dgp, k, rng).pool;
}

}  // namespace fairsel
