#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fairsel/cli.hpp"
#include "fairsel/config.hpp"
#include "fairsel/error.hpp"
#include "fairsel/population_csv.hpp"

namespace fs = std::filesystem;
using namespace fairsel;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fairsel");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fairsel_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config files: comments, duplicates, typed values") {
    std::istringstream in("# header\nK = 10   # trailing\nschedule = 1, 2,3\n\nrho=0.25\n");
    const RunConfig cfg = RunConfig::parse(in);
    CHECK(cfg.count("K") == 10);
    CHECK(cfg.counts("schedule") == std::vector<std::size_t>{1, 2, 3});
    CHECK(cfg.real("rho") == 0.25);
    CHECK_THROWS_WITH_AS(cfg.count("reps"), "missing required key 'reps'", ConfigError);
    CHECK_THROWS_AS(cfg.count("rho"), ConfigError);
    CHECK_THROWS_AS(cfg.reject_unknown({"K", "rho"}), ConfigError);

    std::istringstream dup("K = 1\nK = 2\n");
    CHECK_THROWS_AS(RunConfig::parse(dup), ConfigError);
    std::istringstream junk("just words\n");
    CHECK_THROWS_AS(RunConfig::parse(junk), ConfigError);
}

TEST_CASE("missing required key exits 2 and names the key") {
    const fs::path dir = scratch("missing");
    write_text(dir / "run.cfg", "K = 5\nreps = 10\n");
    const Run r = cli({"experiment", "--config", (dir / "run.cfg").string(), "--seed", "1", "--out", dir.string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("'schedule'") != std::string::npos);
}

TEST_CASE("unknown keys and bad flags exit 2") {
    const fs::path dir = scratch("unknown");
    write_text(dir / "run.cfg", "samples = 10000\ncolour = blue\n");
    CHECK(cli({"counterexample", "--config", (dir / "run.cfg").string(), "--seed", "1"}).code == kExitConfig);
    CHECK(cli({"counterexample", "--seed", "1", "--quantile", "sometimes"}).code == kExitConfig);
    CHECK(cli({"nonsense"}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
}

TEST_CASE("ingest summarizes a valid file and rejects bad rows") {
    const fs::path dir = scratch("ingest");
    write_text(dir / "ok.csv", "x1,z,y\n1,0,2\n3,1,5\n");
    Run r = cli({"ingest", (dir / "ok.csv").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("N,2\n") != std::string::npos);
    CHECK(r.out.find("n0,1\nn1,1\n") != std::string::npos);
    CHECK(r.out.find("disparity,3\n") != std::string::npos);
    CHECK(cli({"ingest", "--validate-only", (dir / "ok.csv").string()}).code == kExitOk);

    write_text(dir / "bad.csv", "x1,z,y\n1,0,2\n3,2,5\n");
    r = cli({"ingest", (dir / "bad.csv").string()});
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("line 3") != std::string::npos);

    write_text(dir / "one.csv", "x1,z,y\n1,0,2\n3,0,5\n");
    CHECK(cli({"ingest", (dir / "one.csv").string()}).code == kExitRuntime);
    CHECK(cli({"ingest", (dir / "absent.csv").string()}).code == kExitRuntime);
}

TEST_CASE("exported synthetic population re-ingests to the same summary") {
    const fs::path dir = scratch("roundtrip");
    const auto dgp = make_synthetic_dgp(3, 0.4, 1.0, 0.5, 1.0, 12);
    RngStream rng(12, 0, StreamPurpose::Test);
    const PopulationTable t = simulate_population(dgp, 300, rng);
    {
        std::ofstream f(dir / "pop.csv", std::ios::binary);
        write_population_csv(f, t);
    }
    const Run r = cli({"ingest", (dir / "pop.csv").string()});
    REQUIRE(r.code == kExitOk);
    const auto s = summarize(t);
    CHECK(r.out.find("n1," + std::to_string(s.n1) + "\n") != std::string::npos);
}

TEST_CASE("counterexample output is deterministic") {
    const fs::path a = scratch("ce_a");
    const fs::path b = scratch("ce_b");
    REQUIRE(cli({"counterexample", "--seed", "3", "--out", a.string()}).code == kExitOk);
    REQUIRE(cli({"counterexample", "--seed", "3", "--out", b.string(), "--threads", "3"}).code == kExitOk);
    const std::string text = read_text(a / "counterexample.csv");
    CHECK(text == read_text(b / "counterexample.csv"));
    CHECK(text.rfind("policy,value,se\npi_u,0.60", 0) == 0);
}

TEST_CASE("population-driven experiment runs end to end") {
    const fs::path dir = scratch("population");
    const auto dgp = make_synthetic_dgp(3, 0.3, 1.0, 0.5, 1.0, 21);
    RngStream rng(21, 0, StreamPurpose::Test);
    {
        std::ofstream f(dir / "pop.csv", std::ios::binary);
        write_population_csv(f, simulate_population(dgp, 400, rng));
    }
    write_text(dir / "run.cfg", "dgp = population\npopulation_csv = " + (dir / "pop.csv").string() +
                                    "\nK = 4\nschedule = 50, 100\nreps = 40\nseed = 8\n");
    const Run r = cli({"experiment", "--config", (dir / "run.cfg").string(), "--out", dir.string()});
    CHECK(r.code == kExitOk);
    const std::string csv = read_text(dir / "experiment.csv");
    CHECK(csv.rfind("policy,m,mean_performance,se_performance,parity,se_parity,replications\n", 0) == 0);
    CHECK(csv.find("ideal,100,") != std::string::npos);
}
