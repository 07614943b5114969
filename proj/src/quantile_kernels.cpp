#include "fairsel/quantile_kernels.hpp"

#include <cmath>

#include "fairsel/error.hpp"

namespace fairsel::kernels {

namespace {

unsigned __int128 ipow(unsigned __int128 base, std::size_t exponent) {
    unsigned __int128 result = 1;
    for (std::size_t e = 0; e < exponent; ++e) result *= base;
    return result;
}

}  // namespace

MaxDifferenceLaw::MaxDifferenceLaw(std::span<const double> s1_asc, std::span<const double> s0_asc,
                                   std::size_t k0, std::size_t k1)
    : s1_(s1_asc), s0_(s0_asc), k0_(k0), k1_(k1) {
    if (s0_.empty() || s1_.empty()) {
        throw MissingSubgroupError("difference law needs scores from both subgroups");
    }
    if (k0_ < 1 || k1_ < 1) throw ParameterError("K0 and K1 must both be at least 1");
    const std::size_t n0 = s0_.size();
    const std::size_t n1 = s1_.size();
    const double bits = std::log2(static_cast<double>(k0_ + k1_)) +
                        static_cast<double>(k0_) * std::log2(static_cast<double>(n0)) +
                        static_cast<double>(k1_) * std::log2(static_cast<double>(n1));
    exact_ = bits < 125.0;
    if (exact_) {
        weight0_.resize(n0);
        unsigned __int128 previous = 0;
        for (std::size_t j = 0; j < n0; ++j) {
            const unsigned __int128 current = ipow(j + 1, k0_);
            weight0_[j] = current - previous;
            previous = current;
        }
        power1_.resize(n1 + 1);
        for (std::size_t c = 0; c <= n1; ++c) power1_[c] = ipow(c, k1_);
        threshold_ = static_cast<unsigned __int128>(k0_) * previous * power1_[n1];
    } else {
        weight0_f_.resize(n0);
        long double previous = 0.0L;
        for (std::size_t j = 0; j < n0; ++j) {
            const long double current =
                std::pow(static_cast<long double>(j + 1) / static_cast<long double>(n0),
                         static_cast<long double>(k0_));
            weight0_f_[j] = current - previous;
            previous = current;
        }
        power1_f_.resize(n1 + 1);
        for (std::size_t c = 0; c <= n1; ++c) {
            power1_f_[c] = std::pow(static_cast<long double>(c) / static_cast<long double>(n1),
                                    static_cast<long double>(k1_));
        }
    }
}

void MaxDifferenceLaw::count_below(double t, std::vector<std::size_t>& counts) const {
    counts.resize(s0_.size());
    std::size_t c = 0;
    for (std::size_t j = 0; j < s0_.size(); ++j) {
        while (c < s1_.size() && s1_[c] - s0_[j] <= t) ++c;
        counts[j] = c;
    }
}

bool MaxDifferenceLaw::reaches_level(double t) const {
    std::size_t c = 0;
    if (exact_) {
        unsigned __int128 mass = 0;
        for (std::size_t j = 0; j < s0_.size(); ++j) {
            while (c < s1_.size() && s1_[c] - s0_[j] <= t) ++c;
            mass += weight0_[j] * power1_[c];
        }
        return static_cast<unsigned __int128>(k0_ + k1_) * mass >= threshold_;
    }
    long double mass = 0.0L;
    for (std::size_t j = 0; j < s0_.size(); ++j) {
        while (c < s1_.size() && s1_[c] - s0_[j] <= t) ++c;
        mass += weight0_f_[j] * power1_f_[c];
    }
    return static_cast<long double>(k0_ + k1_) * mass >= static_cast<long double>(k0_);
}

double MaxDifferenceLaw::cdf(double t) const {
    std::vector<std::size_t> counts;
    count_below(t, counts);
    const std::size_t n0 = s0_.size();
    const std::size_t n1 = s1_.size();
    long double mass = 0.0L;
    long double previous = 0.0L;
    for (std::size_t j = 0; j < n0; ++j) {
        const long double current = std::pow(
            static_cast<long double>(j + 1) / static_cast<long double>(n0), static_cast<long double>(k0_));
        mass += (current - previous) *
                std::pow(static_cast<long double>(counts[j]) / static_cast<long double>(n1),
                         static_cast<long double>(k1_));
        previous = current;
    }
    return static_cast<double>(mass);
}

double quantile_frontier_walk(const MaxDifferenceLaw& law) {
    return frontier_walk_min(law.s1(), law.s0(), [&](double t) { return law.reaches_level(t); });
}

double quantile_pruned_search(const MaxDifferenceLaw& law) {
    return pruned_search_min(law.s1(), law.s0(), [&](double t) { return law.reaches_level(t); });
}

}  // namespace fairsel::kernels
