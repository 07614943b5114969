#pragma once

// Population CSV format: header `x1,...,xp,z,y`, one record per line,
// z in {0,1}, every other field a finite decimal. Missing or malformed
// fields are rejected with the offending line and column.

#include <iosfwd>
#include <string>

#include "fairsel/core_model.hpp"

namespace fairsel {

PopulationTable read_population_csv(std::istream& in);
PopulationTable read_population_csv(const std::string& path);

/// Writes with 17 significant digits so a read-back reproduces every value.
void write_population_csv(std::ostream& out, const PopulationTable& table);

/// Summary printed by the `ingest` subcommand.
struct PopulationSummary {
    std::size_t size = 0;
    std::size_t dimension = 0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    double mean_y0 = 0.0;
    double mean_y1 = 0.0;

    /// E(Y|Z=1) - E(Y|Z=0) over the empirical law.
    double disparity() const noexcept { return mean_y1 - mean_y0; }
};

PopulationSummary summarize(const PopulationTable& table);

/// Draws a synthetic population of N records, e.g. as a stand-in fixture.
PopulationTable simulate_population(const DataGeneratingProcess& dgp, std::size_t size,
                                    RngStream& rng);

}  // namespace fairsel
