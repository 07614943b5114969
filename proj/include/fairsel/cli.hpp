#pragma once

#include <iosfwd>

namespace fairsel {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Entry point behind the `fairsel` executable: ingest, experiment,
/// lambda-sweep, rates, prop1 and counterexample.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairsel
