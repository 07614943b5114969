#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "fairsel/rng.hpp"

namespace fairsel {

struct GaussianLaw {
    double mean = 0.0;
    double sd = 1.0;
};

struct UniformLaw {
    double lo = 0.0;
    double hi = 1.0;
};

/// Equally weighted atoms; duplicates carry multiplicity.
struct FiniteLaw {
    std::vector<double> atoms;  // ascending
};

/// Conditional law of the true score beta^T X within one subgroup.
class ScoreLaw {
public:
    /// A zero standard deviation yields a point mass.
    static ScoreLaw gaussian(double mean, double sd);
    static ScoreLaw uniform(double lo, double hi);
    static ScoreLaw finite(std::vector<double> atoms);

    bool is_finite() const noexcept { return std::holds_alternative<FiniteLaw>(law_); }
    const FiniteLaw& atoms() const { return std::get<FiniteLaw>(law_); }

    double cdf(double x) const;
    /// Density; only meaningful for continuous laws.
    double density(double x) const;
    double mean() const;
    double sd() const;

    /// Integration range: the support, clipped to mean +/- 12 sd.
    double lower() const;
    double upper() const;

    double sample(RngStream& rng) const;

private:
    explicit ScoreLaw(std::variant<GaussianLaw, UniformLaw, FiniteLaw> law) : law_(std::move(law)) {}

    std::variant<GaussianLaw, UniformLaw, FiniteLaw> law_;
};

/// Width of the integration window in standard deviations.
inline constexpr double kGridHalfWidthSd = 12.0;

}  // namespace fairsel
