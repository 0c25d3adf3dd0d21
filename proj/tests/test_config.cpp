#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clocksync/config.hpp"
#include "clocksync/estimation.hpp"

using namespace clocksync;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "scenario": {"name": "eddington", "omega": 1.0, "transit": 0.5, "measure_delay": 1.0},
  "channel": {"model": "mixture", "epsilon": 0.4},
  "frame": {"delta_grid": [-0.2, 0.0, 0.2]},
  "run": {"mode": "exact"}
})";

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    for (const auto& e : errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("clocksync_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("CLOCKSYNC_CLI");
    REQUIRE(cli != nullptr);
    int ret = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(ret);
}

}  // namespace

TEST_CASE("a minimal config parses") {
    auto res = parse_config(kMinimal);
    REQUIRE(res.ok());
    CHECK(res.config->scenario_name == "eddington");
    CHECK(res.config->channel_name == "mixture");
    CHECK(res.config->channel_value == doctest::Approx(0.4));
    CHECK(res.config->delta_grid.size() == 3);
    CHECK_FALSE(res.config->sampled);
    CHECK(res.config->party == Actor::Bob);
}

TEST_CASE("out-of-range channel parameters name the field and the bound") {
    std::string text = kMinimal;
    text.replace(text.find("0.4"), 3, "1.5");
    auto res = parse_config(text);
    REQUIRE_FALSE(res.ok());
    CHECK(mentions(res.errors, "channel.epsilon"));
    CHECK(mentions(res.errors, "[0,1]"));
    CHECK(mentions(res.errors, "1.5"));
}

TEST_CASE("sampled mode without a seed is rejected") {
    std::string text = kMinimal;
    text.replace(text.find("\"exact\""), 7, "\"sampled\", \"shots\": 100");
    auto res = parse_config(text);
    REQUIRE_FALSE(res.ok());
    CHECK(mentions(res.errors, "seed"));
}

TEST_CASE("unknown scenario names are rejected") {
    std::string text = kMinimal;
    text.replace(text.find("eddington"), 9, "langevin");
    auto res = parse_config(text);
    REQUIRE_FALSE(res.ok());
    CHECK(mentions(res.errors, "langevin"));
}

TEST_CASE("all validation failures are collected, not just the first") {
    auto res = parse_config(R"({
      "scenario": {"name": "nope"},
      "channel": {"model": "mixture", "epsilon": 7},
      "run": {"mode": "magic"}
    })");
    REQUIRE_FALSE(res.ok());
    CHECK(res.errors.size() >= 4);
    CHECK(mentions(res.errors, "scenario"));
    CHECK(mentions(res.errors, "channel.epsilon"));
    CHECK(mentions(res.errors, "run.mode"));
    CHECK(mentions(res.errors, "frame"));
}

TEST_CASE("invalid JSON reports a parse error instead of throwing") {
    auto res = parse_config("{ not json");
    REQUIRE_FALSE(res.ok());
    CHECK(mentions(res.errors, "invalid JSON"));
}

TEST_CASE("inline scenarios build custom timelines") {
    auto res = parse_config(R"({
      "scenario": {"name": "inline", "events": [
        {"actor": "alice", "proper_time": 0.0, "action": {"type": "prepare",
          "subsystems": [{"id": "c", "levels": [{"omega": 0.0}, {"omega": 1.0}]}],
          "amplitudes": [0.70710678118654752, 0.70710678118654752]}},
        {"actor": "alice", "proper_time": 0.0, "action": {"type": "send", "subsystem": "c", "transit": 0.5}},
        {"actor": "bob", "proper_time": 0.0, "action": {"type": "receive", "subsystem": "c"}},
        {"actor": "bob", "proper_time": 1.0, "action": {"type": "measure", "target": "c", "basis": "x", "label": "x"}}
      ]},
      "channel": {"model": "fully_random"},
      "frame": {"delta": 0.1},
      "run": {"mode": "exact"}
    })");
    REQUIRE(res.ok());
    CHECK(res.config->timeline.events.size() == 4);
    auto rec = run_exact(with_delta(res.config->timeline, 0.1));
    CHECK(rec.joint_outcomes.size() == 2);
}

TEST_CASE("serialize and parse round-trip") {
    std::string text = kMinimal;
    text.replace(text.find("\"exact\""), 7, "\"sampled\", \"shots\": 50");
    text.insert(text.rfind('}'), ", \"seed\": 99, \"mle\": {\"grid\": [0.0, 0.1, 0.2]}");
    auto res = parse_config(text);
    REQUIRE(res.ok());
    auto res2 = parse_config(serialize(*res.config));
    REQUIRE(res2.ok());
    CHECK(res2.config->scenario_name == res.config->scenario_name);
    CHECK(res2.config->channel_value == res.config->channel_value);
    CHECK(res2.config->delta_grid == res.config->delta_grid);
    CHECK(res2.config->sampled == res.config->sampled);
    CHECK(res2.config->shots == res.config->shots);
    CHECK(res2.config->seed == res.config->seed);
    CHECK(res2.config->mle_grid == res.config->mle_grid);
    CHECK(serialize(*res2.config) == serialize(*res.config));
}

TEST_CASE("sweep rows reproduce the library-level no-go table") {
    auto res = parse_config(R"({
      "scenario": {"name": "eddington", "omega": 1.0, "transit": 0.5, "measure_delay": 1.0,
                   "measured": false},
      "channel": {"model": "mixture", "epsilon": 0.0},
      "frame": {"delta_grid": [-0.2, 0.0, 0.2]},
      "run": {"mode": "exact"},
      "sweep": {"parameter": "epsilon", "grid": [0.0, 0.5, 1.0]}
    })");
    REQUIRE(res.ok());
    auto dir = fresh_dir("sweep");
    std::ostringstream summary;
    CHECK(execute(*res.config, {.out_dir = dir.string()}, summary) == 0);

    std::vector<std::pair<double, PhaseModel>> models = {
        {0.0, Mixture{0.0}}, {0.5, Mixture{0.5}}, {1.0, Mixture{1.0}}};
    auto rows = nogo_sweep(res.config->timeline, {-0.2, 0.0, 0.2}, models);

    std::string csv = slurp(dir / "results.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    for (const auto& row : rows) {
        REQUIRE(std::getline(lines, line));
        std::istringstream cells(line);
        std::string noise, delta, td, q;
        std::getline(cells, noise, ',');
        std::getline(cells, delta, ',');
        std::getline(cells, td, ',');
        std::getline(cells, q, ',');
        CHECK(std::stod(noise) == doctest::Approx(row.noise_value));
        CHECK(std::stod(td) == doctest::Approx(row.trace_distance_max).epsilon(1e-12));
        CHECK(std::stod(q) == doctest::Approx(row.qfi_mid).epsilon(1e-9));
    }
}

TEST_CASE("the CLI is byte-deterministic for a fixed config and seed") {
    auto dir = fresh_dir("cli");
    std::string cfg = (dir / "cfg.json").string();
    {
        std::ofstream f(cfg);
        f << R"({
          "scenario": {"name": "eddington", "omega": 1.0, "transit": 0.4, "measure_delay": 1.0},
          "channel": {"model": "mixture", "epsilon": 0.3},
          "frame": {"delta_grid": [0.0, 0.1, 0.2]},
          "run": {"mode": "sampled", "shots": 200},
          "mle": {"grid": [0.0, 0.05, 0.1, 0.15, 0.2]},
          "seed": 12345
        })";
    }
    CHECK(run_cli("-c " + cfg + " -o " + (dir / "a").string()) == 0);
    CHECK(run_cli("-c " + cfg + " -o " + (dir / "b").string()) == 0);
    for (const char* f : {"results.csv", "states.csv", "outcomes.csv"}) {
        CAPTURE(f);
        std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
        CHECK(!a.empty());
        CHECK(a == b);
    }
    // A different seed changes the sampled artifacts.
    CHECK(run_cli("-c " + cfg + " -o " + (dir / "c").string() + " -s 999") == 0);
    CHECK(slurp(dir / "a" / "outcomes.csv") != slurp(dir / "c" / "outcomes.csv"));
}

TEST_CASE("the CLI exits nonzero on an invalid config") {
    auto dir = fresh_dir("cli_bad");
    std::string cfg = (dir / "bad.json").string();
    {
        std::ofstream f(cfg);
        f << R"({"scenario": {"name": "nope"}})";
    }
    CHECK(run_cli("-c " + cfg + " -o " + (dir / "out").string()) == 1);
    CHECK(run_cli("-c /nonexistent/path.json") != 0);
}

TEST_CASE("the CLI writes JSON tables when asked") {
    auto dir = fresh_dir("cli_json");
    std::string cfg = (dir / "cfg.json").string();
    {
        std::ofstream f(cfg);
        f << R"({
          "scenario": {"name": "einstein", "transit_out": 0.5, "transit_back": 0.5},
          "channel": {"model": "fully_random"},
          "frame": {"delta": 0.1},
          "run": {"mode": "exact"},
          "output": {"format": "json"}
        })";
    }
    CHECK(run_cli("-c " + cfg + " -o " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "results.json"));
    CHECK(fs::exists(dir / "out" / "outcomes.json"));
    CHECK(slurp(dir / "out" / "results.json").find("qfi") != std::string::npos);
}
