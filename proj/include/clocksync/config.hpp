// config.hpp — declarative scenario files and the batch runner behind the CLI.

#pragma once

#include <iosfwd>
#include <optional>

#include "clocksync/estimation.hpp"

namespace clocksync {

// A parsed and validated scenario file. The file format is JSON; see the
// bundled configs/ directory for the grammar by example.
struct ScenarioConfig {
    std::string scenario_name;
    std::string scenario_json;  // original scenario object, for round-trips
    Timeline timeline;
    Actor party = Actor::Bob;  // whose reduced state the tables report

    std::string channel_name;
    PhaseModel channel_model;
    double channel_value = 0.0;  // numeric noise parameter for table rows

    std::vector<double> delta_grid;  // one entry = single offset
    bool sampled = false;
    long shots = 0;

    bool has_sweep = false;
    std::string sweep_parameter;
    std::vector<double> sweep_grid;

    std::vector<double> mle_grid;  // empty: no offset estimation

    std::string format = "csv";  // "csv" | "json"
    std::uint64_t seed = 0;
    bool has_seed = false;
};

struct ParseResult {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;  // all validation failures, not just the first
    bool ok() const { return errors.empty(); }
};

ParseResult parse_config(const std::string& text);

// Config -> file text; parse_config(serialize(c)) yields an equivalent config.
std::string serialize(const ScenarioConfig& c);

struct ExecuteOptions {
    std::string out_dir = "out";
    std::optional<std::string> format;      // overrides config
    std::optional<std::uint64_t> seed;      // overrides config
    int jobs = 1;
    int verbosity = 0;
};

// Runs the config and writes results/states/outcomes tables into out_dir,
// printing a one-line summary per sweep row. Identical config + seed yields
// byte-identical outputs. Returns 0 on success; scenario failures throw.
int execute(const ScenarioConfig& config, const ExecuteOptions& opts, std::ostream& summary);

}  // namespace clocksync
