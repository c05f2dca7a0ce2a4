#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace toruslab {

inline constexpr const char* kVersion = "0.1.0";

// Outcome of one experiment evaluation: CSV rows plus a pass/fail verdict for
// the assertion-class checks (the uniformity proxies).
struct ExperimentResult {
    bool pass = true;
    std::string detail;
    std::string header;
    std::vector<std::string> rows;
};

using ExperimentFn =
    std::function<ExperimentResult(const nlohmann::json& params, std::uint64_t seed, int workers)>;

struct ExperimentDef {
    std::string name;
    std::string description;
    nlohmann::json defaults;             // full parameter schema with defaults
    std::vector<std::string> list_params;  // parameters that are lists by design
    ExperimentFn run;
};

const std::vector<ExperimentDef>& experiment_catalog();
const ExperimentDef* find_experiment(const std::string& name);

struct RunConfig {
    std::string experiment;
    nlohmann::json params;  // may hold arrays for scalar parameters -> sweep
    std::uint64_t seed = 1;
    std::string output = "out.csv";
    int workers = 1;
};

RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

// Expands sweeps, runs every point, writes the CSV (header comments with
// version / seed / config hash, data rows, one verdict row).  Returns 0 when
// every assertion-class check passed.
int run_experiment(const RunConfig& config);

// Diagonal r = rt classification data over the (1/r, 1/q) square.
std::string region_csv(int d, int resolution);

std::uint64_t config_hash(const nlohmann::json& j);

// deterministic shortest-roundtrip double formatting for CSV bodies
std::string format_double(double v);

}  // namespace toruslab
