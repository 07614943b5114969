#pragma once

// Searches over the difference matrix B(i, j) = s1[i] - s0[j] built from two
// ascending score vectors. B increases in i and decreases in j, so for any
// predicate that is monotone in t the entries satisfying it form a staircase.
// Both searches below return the smallest entry t of B with good(t) true.
//
// frontier_walk_min is the plain staircase walk (at most n0 + n1 predicate
// calls) and serves as the reference; pruned_search_min discards a constant
// fraction of the remaining entries per predicate call and is what the
// estimators use.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fairsel/rng.hpp"

namespace fairsel::kernels {

/// Law of R1 - R0 where R_z is the maximum of K_z draws with replacement
/// from the scores of subgroup z. Non-owning: the spans must outlive it.
class MaxDifferenceLaw {
public:
    MaxDifferenceLaw(std::span<const double> s1_asc, std::span<const double> s0_asc,
                     std::size_t k0, std::size_t k1);

    std::span<const double> s1() const noexcept { return s1_; }
    std::span<const double> s0() const noexcept { return s0_; }

    /// True iff P(R1 - R0 <= t) >= K0 / K. Differences are compared exactly
    /// as computed, s1[i] - s0[j] <= t.
    bool reaches_level(double t) const;

    /// P(R1 - R0 <= t) in floating point.
    double cdf(double t) const;

    /// Whether reaches_level runs in exact integer arithmetic.
    bool exact_arithmetic() const noexcept { return exact_; }

private:
    // counts[j] = #{i : s1[i] - s0[j] <= t}, nondecreasing in j.
    void count_below(double t, std::vector<std::size_t>& counts) const;

    std::span<const double> s1_;
    std::span<const double> s0_;
    std::size_t k0_;
    std::size_t k1_;
    bool exact_ = false;
    // Exact path: weight0_[j] = (j+1)^K0 - j^K0, power1_[c] = c^K1.
    std::vector<unsigned __int128> weight0_;
    std::vector<unsigned __int128> power1_;
    unsigned __int128 threshold_ = 0;  // K0 * n0^K0 * n1^K1
    // Floating path, normalized to probabilities.
    std::vector<long double> weight0_f_;
    std::vector<long double> power1_f_;
};

template <class Pred>
double frontier_walk_min(std::span<const double> s1_asc, std::span<const double> s0_asc,
                         Pred&& good) {
    const std::size_t n1 = s1_asc.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    for (std::size_t j = 0; j < s0_asc.size(); ++j) {
        while (i < n1 && !good(s1_asc[i] - s0_asc[j])) ++i;
        if (i == n1) break;
        const double entry = s1_asc[i] - s0_asc[j];
        if (entry < best) best = entry;
    }
    return best;
}

template <class Pred>
double pruned_search_min(std::span<const double> s1_asc, std::span<const double> s0_asc,
                         Pred&& good) {
    const std::size_t n0 = s0_asc.size();
    const std::size_t n1 = s1_asc.size();
    // Candidate rows of column j are [lo[j], hi[j]).
    std::vector<std::size_t> lo(n0, 0);
    std::vector<std::size_t> hi(n0, n1);
    std::size_t remaining = n0 * n1;
    double best = std::numeric_limits<double>::infinity();
    // Pivots only steer the search; the result does not depend on them.
    std::uint64_t state = 0x5DEECE66DULL;

    while (remaining > 0) {
        state = splitmix64(state);
        std::size_t pick = static_cast<std::size_t>(state % remaining);
        std::size_t col = 0;
        while (pick >= hi[col] - lo[col]) {
            pick -= hi[col] - lo[col];
            ++col;
        }
        const double pivot = s1_asc[lo[col] + pick] - s0_asc[col];

        remaining = 0;
        if (good(pivot)) {
            best = pivot;
            // Drop entries >= pivot: a suffix of each column, whose start
            // is nondecreasing in j.
            std::size_t cut = 0;
            for (std::size_t j = 0; j < n0; ++j) {
                while (cut < n1 && s1_asc[cut] - s0_asc[j] < pivot) ++cut;
                if (cut < hi[j]) hi[j] = cut < lo[j] ? lo[j] : cut;
                remaining += hi[j] - lo[j];
            }
        } else {
            // Drop entries <= pivot: a prefix of each column.
            std::size_t cut = 0;
            for (std::size_t j = 0; j < n0; ++j) {
                while (cut < n1 && s1_asc[cut] - s0_asc[j] <= pivot) ++cut;
                if (cut > lo[j]) lo[j] = cut > hi[j] ? hi[j] : cut;
                remaining += hi[j] - lo[j];
            }
        }
    }
    return best;
}

/// K0/K-quantile of the law, by the reference staircase walk.
double quantile_frontier_walk(const MaxDifferenceLaw& law);

/// K0/K-quantile of the law, by pruned staircase search.
double quantile_pruned_search(const MaxDifferenceLaw& law);

}  // namespace fairsel::kernels
