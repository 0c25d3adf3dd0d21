// clocksync — run scenario configs and emit result tables.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "clocksync/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Dephasing-channel clock synchronization simulator"};

    std::string config_path;
    clocksync::ExecuteOptions opts;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;

    app.add_option("-c,--config", config_path, "Scenario config file (JSON)")->required();
    app.add_option("-o,--out", opts.out_dir, "Output directory")->default_val("out");
    app.add_option("-f,--format", format, "Output format: csv or json (overrides config)");
    auto* seed_opt = app.add_option("-s,--seed", seed, "Seed override");
    app.add_option("-j,--jobs", opts.jobs, "Parallelism degree")->default_val(1)
        ->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", opts.verbosity, "Increase verbosity");

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file '" << config_path << "'\n";
        return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    clocksync::ParseResult parsed = clocksync::parse_config(buf.str());
    if (!parsed.ok()) {
        for (const auto& e : parsed.errors) std::cerr << "config error: " << e << "\n";
        return 1;
    }
    if (!format.empty()) opts.format = format;
    if (seed_set) opts.seed = seed;

    try {
        return clocksync::execute(*parsed.config, opts, std::cout);
    } catch (const clocksync::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
