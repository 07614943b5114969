#include "fairsel/policies.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairsel/error.hpp"
#include "fairsel/quantile_kernels.hpp"

namespace fairsel {

namespace {

// Argmax per subgroup and overall, lowest index on ties. When `threshold`
// is given and the pool is mixed, group 1 wins iff R1 - R0 >= threshold.
PolicyDecision decide(std::vector<double> scores, const GroupLabels& z,
                      std::optional<double> threshold) {
    PolicyDecision d;
    std::optional<std::size_t> best[2];
    std::size_t overall = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        auto& slot = best[z[k]];
        if (!slot || scores[k] > scores[*slot]) slot = k;
        if (scores[k] > scores[overall]) overall = k;
    }
    if (best[0]) d.r_hat_0 = scores[*best[0]];
    if (best[1]) d.r_hat_1 = scores[*best[1]];
    if (threshold && best[0] && best[1]) {
        d.threshold = threshold;
        d.selected_index = (*d.r_hat_1 - *d.r_hat_0 >= *threshold) ? *best[1] : *best[0];
    } else {
        d.selected_index = overall;
    }
    d.selected_subgroup = z[d.selected_index];
    d.scores = std::move(scores);
    return d;
}

std::vector<double> linear_scores(const Vector& coef, const CandidatePool& pool) {
    if (static_cast<std::size_t>(coef.size()) != static_cast<std::size_t>(pool.features().cols())) {
        throw ParameterError("coefficient length does not match pool dimension");
    }
    const Vector s = pool.features() * coef;
    return std::vector<double>(s.data(), s.data() + s.size());
}

// Law of R0 = max of K0 draws from F0 as a weighted point set: exact atoms
// for finite laws, composite Simpson nodes otherwise.
struct MaxLawNodes {
    std::vector<double> nodes;
    std::vector<double> weights;
};

MaxLawNodes max_law_nodes(const ScoreLaw& law, std::size_t k) {
    MaxLawNodes out;
    const double kd = static_cast<double>(k);
    if (law.is_finite()) {
        const auto& atoms = law.atoms().atoms;
        const double n = static_cast<double>(atoms.size());
        double previous = 0.0;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const double current = std::pow(static_cast<double>(j + 1) / n, kd);
            out.nodes.push_back(atoms[j]);
            out.weights.push_back(current - previous);
            previous = current;
        }
        return out;
    }
    const double lo = law.lower();
    const double hi = law.upper();
    const double h = (hi - lo) / static_cast<double>(kGridIntervals);
    for (std::size_t i = 0; i <= kGridIntervals; ++i) {
        const double u = lo + h * static_cast<double>(i);
        const double simpson = (i == 0 || i == kGridIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double w = simpson * h / 3.0 * kd * std::pow(law.cdf(u), kd - 1.0) * law.density(u);
        if (!std::isfinite(w)) throw NumericError("integration grid produced a non-finite weight");
        out.nodes.push_back(u);
        out.weights.push_back(w);
    }
    return out;
}

double difference_cdf(const MaxLawNodes& r0, const ScoreLaw& law1, std::size_t k1, double t) {
    double p = 0.0;
    const double kd = static_cast<double>(k1);
    for (std::size_t i = 0; i < r0.nodes.size(); ++i) {
        if (r0.weights[i] == 0.0) continue;
        p += r0.weights[i] * std::pow(law1.cdf(r0.nodes[i] + t), kd);
    }
    if (!std::isfinite(p)) throw NumericError("difference cdf is not finite");
    return p;
}

double grid_quantile(const IdealModel& model, std::size_t k0, std::size_t k1) {
    const MaxLawNodes r0 = max_law_nodes(model.law0, k0);
    const double kd = static_cast<double>(k0 + k1);
    const double k0d = static_cast<double>(k0);
    auto reaches = [&](double t) { return kd * difference_cdf(r0, model.law1, k1, t) >= k0d; };

    double lo = model.law1.lower() - model.law0.upper();
    double hi = model.law1.upper() - model.law0.lower();
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericError("quantile bracket is not finite");
    if (reaches(lo)) return lo;
    if (!reaches(hi)) throw NumericError("difference cdf never reaches the K0/K level on the grid");
    for (int iter = 0; iter < 200 && hi - lo > kBisectionTolerance; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (reaches(mid) ? hi : lo) = mid;
    }
    return hi;
}

double monte_carlo_quantile(const IdealModel& model, std::size_t k0, std::size_t k1,
                            const MonteCarlo& mc) {
    if (mc.samples < 1) throw ParameterError("Monte Carlo quantile needs at least one sample");
    RngStream rng(mc.seed, k0 * 1000 + k1, StreamPurpose::MonteCarlo);
    std::vector<double> draws(mc.samples);
    for (auto& draw : draws) {
        double best1 = -INFINITY;
        for (std::size_t k = 0; k < k1; ++k) best1 = std::max(best1, model.law1.sample(rng));
        double best0 = -INFINITY;
        for (std::size_t k = 0; k < k0; ++k) best0 = std::max(best0, model.law0.sample(rng));
        draw = best1 - best0;
    }
    const std::size_t rank = quantile_rank(mc.samples, k0, k1);
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(rank), draws.end());
    return draws[rank];
}

std::vector<double> percentile_scores(const std::vector<double>& raw, const GroupLabels& z,
                                      auto&& cdf_for_group) {
    std::vector<double> u(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) u[k] = cdf_for_group(z[k], raw[k]);
    return u;
}

}  // namespace

IdealModel ideal_model_from_dgp(const DataGeneratingProcess& dgp) {
    if (dgp.kind() == DgpKind::SyntheticGaussian) {
        const Vector& b = dgp.beta();
        auto law = [&](int g) {
            return ScoreLaw::gaussian(b.dot(dgp.mean(g)), std::sqrt(std::max(0.0, b.dot(dgp.covariance(g) * b))));
        };
        return IdealModel{b, law(0), law(1)};
    }
    const PopulationTable& pop = *dgp.population();
    const HistoryDataset all(pop.features, pop.z, pop.y);
    Vector beta = ols_fit(all);
    const Vector scores = pop.features * beta;
    std::vector<double> s0;
    std::vector<double> s1;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        (pop.z[i] == 1 ? s1 : s0).push_back(scores[static_cast<Eigen::Index>(i)]);
    }
    return IdealModel{std::move(beta), ScoreLaw::finite(std::move(s0)), ScoreLaw::finite(std::move(s1))};
}

QuantileMethod default_method(const IdealModel& model) {
    if (model.law0.is_finite() && model.law1.is_finite()) return ExactFinite{};
    return AnalyticGrid{};
}

double ideal_difference_cdf(const IdealModel& model, std::size_t k0, std::size_t k1, double t) {
    if (k0 < 1 || k1 < 1) throw ParameterError("K0 and K1 must both be at least 1");
    return difference_cdf(max_law_nodes(model.law0, k0), model.law1, k1, t);
}

double ideal_quantile(const IdealModel& model, std::size_t k0, std::size_t k1,
                      const QuantileMethod& method) {
    if (k0 < 1 || k1 < 1) throw ParameterError("K0 and K1 must both be at least 1");
    if (std::holds_alternative<AnalyticGrid>(method)) return grid_quantile(model, k0, k1);
    if (const auto* mc = std::get_if<MonteCarlo>(&method)) return monte_carlo_quantile(model, k0, k1, *mc);
    if (!model.law0.is_finite() || !model.law1.is_finite()) {
        throw ParameterError("ExactFinite quantile needs finite laws for both subgroups");
    }
    const kernels::MaxDifferenceLaw law(model.law1.atoms().atoms, model.law0.atoms().atoms, k0, k1);
    return kernels::quantile_pruned_search(law);
}

IdealThresholds::IdealThresholds(const IdealModel& model, std::size_t k, const QuantileMethod& method)
    : k_(k), by_k1_(k, 0.0) {
    for (std::size_t k1 = 1; k1 + 1 <= k; ++k1) by_k1_[k1] = ideal_quantile(model, k - k1, k1, method);
}

double IdealThresholds::operator()(std::size_t k0, std::size_t k1) const {
    if (k0 + k1 != k_ || k0 < 1 || k1 < 1) {
        throw ParameterError("threshold table built for pools of size " + std::to_string(k_));
    }
    return by_k1_[k1];
}

PolicyDecision policy_parity_of_treatment(const Vector& beta, const CandidatePool& pool) {
    return decide(linear_scores(beta, pool), pool.z(), std::nullopt);
}

PolicyDecision policy_fair_prediction(const IdealModel& model, const CandidatePool& pool) {
    const auto raw = linear_scores(model.beta, pool);
    return decide(percentile_scores(raw, pool.z(), [&](int g, double s) { return model.law(g).cdf(s); }),
                  pool.z(), std::nullopt);
}

PolicyDecision policy_fair_prediction(const FittedSelector& selector, const CandidatePool& pool) {
    const auto raw = linear_scores(selector.beta_hat(), pool);
    return decide(percentile_scores(raw, pool.z(), [&](int g, double s) { return selector.cdf(g)(s); }),
                  pool.z(), std::nullopt);
}

PolicyDecision policy_ideal_fair(const IdealModel& model, const CandidatePool& pool,
                                 const QuantileMethod& method) {
    std::optional<double> q;
    if (pool.mixed()) q = ideal_quantile(model, pool.count(0), pool.count(1), method);
    return decide(linear_scores(model.beta, pool), pool.z(), q);
}

PolicyDecision policy_ideal_fair(const IdealModel& model, const CandidatePool& pool) {
    return policy_ideal_fair(model, pool, default_method(model));
}

PolicyDecision policy_ideal_fair(const IdealModel& model, const IdealThresholds& thresholds,
                                 const CandidatePool& pool) {
    std::optional<double> q;
    if (pool.mixed()) q = thresholds(pool.count(0), pool.count(1));
    return decide(linear_scores(model.beta, pool), pool.z(), q);
}

PolicyDecision policy_empirical_fair(const FittedSelector& selector, const CandidatePool& pool) {
    std::optional<double> q;
    if (pool.mixed()) q = exact_quantile(selector, pool.count(0), pool.count(1));
    return decide(linear_scores(selector.beta_hat(), pool), pool.z(), q);
}

PolicyDecision policy_empirical_fair(const FittedSelector& selector, const CandidatePool& pool,
                                     QuantileMode mode, RngStream& rng) {
    if (mode.kind == QuantileMode::Kind::Exact) return policy_empirical_fair(selector, pool);
    std::optional<double> q;
    if (pool.mixed()) q = bootstrap_quantile(selector, pool.count(0), pool.count(1), mode.reps, rng);
    return decide(linear_scores(selector.beta_hat(), pool), pool.z(), q);
}

Matrix pairwise_penalty_matrix(const HistoryDataset& history) {
    const std::size_t n0 = history.n0();
    const std::size_t n1 = history.n1();
    if (n0 == 0 || n1 == 0) throw MissingSubgroupError("pairwise penalty needs both subgroups");
    const Matrix& x = history.features();
    const Vector& y = history.y();
    const auto p = x.cols();

    // Group-0 records ordered by response so each group-1 record only visits
    // partners with |y - y'| inside the weight cutoff.
    std::vector<Eigen::Index> zero_rows;
    std::vector<Eigen::Index> one_rows;
    for (std::size_t m = 0; m < history.size(); ++m) {
        (history.z()[m] == 1 ? one_rows : zero_rows).push_back(static_cast<Eigen::Index>(m));
    }
    std::sort(zero_rows.begin(), zero_rows.end(),
              [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b] || (y[a] == y[b] && a < b); });
    std::vector<double> y0(zero_rows.size());
    for (std::size_t i = 0; i < zero_rows.size(); ++i) y0[i] = y[zero_rows[i]];
    const double reach = std::sqrt(-std::log(kPairWeightCutoff)) + 1e-9;

    // M * n1 * n0 = X^T diag(W) X - A^T V - V^T A, where W holds each record's
    // total pair weight, A the group-1 rows and V their weighted partner sums.
    Vector total_weight = Vector::Zero(static_cast<Eigen::Index>(history.size()));
    Matrix cross = Matrix::Zero(p, p);
    Vector partner_sum(p);
    for (Eigen::Index m : one_rows) {
        const auto first = std::lower_bound(y0.begin(), y0.end(), y[m] - reach) - y0.begin();
        const auto last = std::upper_bound(y0.begin(), y0.end(), y[m] + reach) - y0.begin();
        partner_sum.setZero();
        double weight_sum = 0.0;
        for (auto i = first; i < last; ++i) {
            const double d = y[m] - y0[static_cast<std::size_t>(i)];
            const double w = std::exp(-d * d);
            if (w < kPairWeightCutoff) continue;
            const Eigen::Index partner = zero_rows[static_cast<std::size_t>(i)];
            partner_sum.noalias() += w * x.row(partner).transpose();
            weight_sum += w;
            total_weight[partner] += w;
        }
        total_weight[m] += weight_sum;
        cross.noalias() += x.row(m).transpose() * partner_sum.transpose();
    }
    Matrix weighted = Matrix::Zero(p, p);
    weighted.selfadjointView<Eigen::Lower>().rankUpdate(
        (x.array().colwise() * total_weight.array().sqrt()).matrix().transpose());
    weighted.triangularView<Eigen::StrictlyUpper>() = weighted.transpose();
    Matrix m = weighted - cross - cross.transpose();
    return m / (static_cast<double>(n1) * static_cast<double>(n0));
}

PenalizedSystem penalized_system(const HistoryDataset& history, Penalty penalty) {
    if (history.n0() == 0 || history.n1() == 0) {
        throw MissingSubgroupError("penalized fit needs both subgroups");
    }
    if (history.size() < history.dimension()) {
        throw SingularDesignError("fewer records than features");
    }
    const Matrix& x = history.features();
    PenalizedSystem sys;
    sys.gram = Matrix::Zero(x.cols(), x.cols());
    sys.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    sys.gram.triangularView<Eigen::StrictlyUpper>() = sys.gram.transpose();
    sys.xty = x.transpose() * history.y();

    if (penalty == Penalty::PairwiseWeighted) {
        sys.penalty_matrix = pairwise_penalty_matrix(history);
        sys.penalty_rhs = Vector::Zero(x.cols());
        return sys;
    }
    Vector mean_x[2] = {Vector::Zero(x.cols()), Vector::Zero(x.cols())};
    double mean_y[2] = {0.0, 0.0};
    for (std::size_t m = 0; m < history.size(); ++m) {
        const int g = history.z()[m];
        mean_x[g] += x.row(static_cast<Eigen::Index>(m)).transpose();
        mean_y[g] += history.y()[static_cast<Eigen::Index>(m)];
    }
    const double n0 = static_cast<double>(history.n0());
    const double n1 = static_cast<double>(history.n1());
    const Vector c = mean_x[1] / n1 - mean_x[0] / n0;
    const double d = mean_y[1] / n1 - mean_y[0] / n0;
    sys.penalty_matrix = c * c.transpose();
    sys.penalty_rhs = d * c;
    return sys;
}

Vector PenalizedSystem::solve(double lambda) const {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ParameterError("lambda must be finite and >= 0");
    if (lambda == 0.0) return solve_normal_equations(gram, xty);
    return solve_normal_equations(gram + lambda * penalty_matrix, xty + lambda * penalty_rhs);
}

Vector penalized_fit(const HistoryDataset& history, Penalty penalty, double lambda) {
    return penalized_system(history, penalty).solve(lambda);
}

PolicyDecision policy_penalized(const Vector& theta, const CandidatePool& pool) {
    return policy_parity_of_treatment(theta, pool);
}

}  // namespace fairsel
