#include "fairsel/score_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

ScoreLaw ScoreLaw::gaussian(double mean, double sd) {
    if (!std::isfinite(mean) || !std::isfinite(sd) || sd < 0.0) {
        throw ParameterError("Gaussian score law needs finite mean and nonnegative sd");
    }
    if (sd == 0.0) return finite({mean});
    return ScoreLaw(GaussianLaw{mean, sd});
}

ScoreLaw ScoreLaw::uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
        throw ParameterError("uniform score law needs finite lo < hi");
    }
    return ScoreLaw(UniformLaw{lo, hi});
}

ScoreLaw ScoreLaw::finite(std::vector<double> atoms) {
    if (atoms.empty()) throw ParameterError("finite score law needs at least one atom");
    for (double a : atoms) {
        if (!std::isfinite(a)) throw ParameterError("finite score law atoms must be finite");
    }
    std::sort(atoms.begin(), atoms.end());
    return ScoreLaw(FiniteLaw{std::move(atoms)});
}

double ScoreLaw::cdf(double x) const {
    return std::visit(
        overloaded{
            [x](const GaussianLaw& g) { return 0.5 * std::erfc(-(x - g.mean) / (g.sd * std::numbers::sqrt2)); },
            [x](const UniformLaw& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
            [x](const FiniteLaw& f) {
                const auto count = std::upper_bound(f.atoms.begin(), f.atoms.end(), x) - f.atoms.begin();
                return static_cast<double>(count) / static_cast<double>(f.atoms.size());
            },
        },
        law_);
}

double ScoreLaw::density(double x) const {
    return std::visit(
        overloaded{
            [x](const GaussianLaw& g) {
                const double z = (x - g.mean) / g.sd;
                return std::exp(-0.5 * z * z) / (g.sd * std::sqrt(2.0 * std::numbers::pi));
            },
            [x](const UniformLaw& u) { return (x >= u.lo && x <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
            [](const FiniteLaw&) -> double { throw ParameterError("finite law has no density"); },
        },
        law_);
}

double ScoreLaw::mean() const {
    return std::visit(
        overloaded{
            [](const GaussianLaw& g) { return g.mean; },
            [](const UniformLaw& u) { return 0.5 * (u.lo + u.hi); },
            [](const FiniteLaw& f) {
                return std::accumulate(f.atoms.begin(), f.atoms.end(), 0.0) /
                       static_cast<double>(f.atoms.size());
            },
        },
        law_);
}

double ScoreLaw::sd() const {
    return std::visit(
        overloaded{
            [](const GaussianLaw& g) { return g.sd; },
            [](const UniformLaw& u) { return (u.hi - u.lo) / std::sqrt(12.0); },
            [this](const FiniteLaw& f) {
                const double mu = mean();
                double ss = 0.0;
                for (double a : f.atoms) ss += (a - mu) * (a - mu);
                return std::sqrt(ss / static_cast<double>(f.atoms.size()));
            },
        },
        law_);
}

double ScoreLaw::lower() const {
    return std::visit(overloaded{
                          [](const GaussianLaw& g) { return g.mean - kGridHalfWidthSd * g.sd; },
                          [](const UniformLaw& u) { return u.lo; },
                          [](const FiniteLaw& f) { return f.atoms.front(); },
                      },
                      law_);
}

double ScoreLaw::upper() const {
    return std::visit(overloaded{
                          [](const GaussianLaw& g) { return g.mean + kGridHalfWidthSd * g.sd; },
                          [](const UniformLaw& u) { return u.hi; },
                          [](const FiniteLaw& f) { return f.atoms.back(); },
                      },
                      law_);
}

double ScoreLaw::sample(RngStream& rng) const {
    return std::visit(overloaded{
                          [&rng](const GaussianLaw& g) { return g.mean + g.sd * rng.normal(); },
                          [&rng](const UniformLaw& u) { return u.lo + (u.hi - u.lo) * rng.uniform(); },
                          [&rng](const FiniteLaw& f) { return f.atoms[rng.index(f.atoms.size())]; },
                      },
                      law_);
}

}  // namespace fairsel
