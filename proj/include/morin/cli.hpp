#pragma once

#include "morin/analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace morin::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kError = 1, kNotMorin = 2, kInconclusive = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string command;
    std::string scene_path;
    std::string out;  // empty: stdout
    std::string csv;  // directory for point-cloud side files
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;  // multiplies every scene tolerance
    std::optional<double> tol_residual;
    std::optional<double> tol_rank;
    std::optional<std::size_t> grid;
    std::optional<std::size_t> depth;
    std::optional<std::size_t> stratum;
    std::vector<double> a;
    bool no_timings = false;
    bool serial = false;
};

struct Outcome {
    int exit_code = kOk;
    Json report;
};

// ---- report building blocks ----

std::string sha256_hex(const std::string& bytes);
Json point_json(std::span<const double> x);
Json witness_json(const analysis::Witness& w);
Json strata_json(const analysis::Strata& s);
Json zero_json(const analysis::ZeroRecord& z);
Json zero_checks_json(const analysis::ZeroChecks& c);
Json corank_json(const analysis::CorankReport& r);
Json morin_json(const analysis::MorinReport& r);
Json congruence_json(const analysis::CongruenceReport& r);
Json oracle_json(const solver::OracleResult& r);

// CSV rows x_1..x_N, depth, type.
struct CsvRow {
    analysis::Point x;
    std::size_t depth = 0;
    int type = -1;
};
void write_csv(const std::string& path, std::size_t dim, const std::vector<CsvRow>& rows);

// ---- commands ----

// Applies the tolerance and grid overrides to a loaded scene.
model::Scene prepared_scene(const Options& opts);
Outcome execute(const Options& opts);

// Full command line: parses, runs, writes the report. Returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace morin::cli
