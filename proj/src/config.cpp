#include "clocksync/config.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace clocksync {

namespace {

using json = nlohmann::ordered_json;

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Complex parse_complex(const json& v) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2) return Complex(v[0].get<double>(), v[1].get<double>());
    throw std::invalid_argument("expected a number or [re, im] pair");
}

Matrix parse_matrix(const json& m) {
    if (!m.is_array() || m.empty()) throw std::invalid_argument("expected a matrix");
    Matrix out(m.size(), m[0].size());
    for (std::size_t r = 0; r < m.size(); ++r) {
        if (!m[r].is_array() || m[r].size() != m[0].size())
            throw std::invalid_argument("ragged matrix");
        for (std::size_t c = 0; c < m[r].size(); ++c) out(r, c) = parse_complex(m[r][c]);
    }
    return out;
}

Vector parse_vector(const json& v) {
    if (!v.is_array() || v.empty()) throw std::invalid_argument("expected a vector");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out(i) = parse_complex(v[i]);
    return out;
}

Matrix parse_basis(const json& b) {
    if (b.is_string()) {
        std::string s = b.get<std::string>();
        if (s == "x") return basis_x();
        if (s == "y") return basis_y();
        if (s == "z") return basis_z();
        throw std::invalid_argument("unknown basis '" + s + "' (expected x, y, z or a matrix)");
    }
    return parse_matrix(b);
}

EnergySpec parse_spec(const json& s) {
    EnergySpec spec;
    for (const auto& l : s.at("levels"))
        spec.levels.push_back({l.at("omega").get<double>(), l.value("degeneracy", 1)});
    spec.validate();
    return spec;
}

Actor parse_actor(const json& a) {
    std::string s = a.get<std::string>();
    if (s == "alice") return Actor::Alice;
    if (s == "bob") return Actor::Bob;
    throw std::invalid_argument("unknown actor '" + s + "'");
}

Event parse_event(const json& e) {
    Event ev;
    ev.actor = parse_actor(e.at("actor"));
    ev.proper_time = e.value("proper_time", 0.0);
    ev.after_receive = e.value("after_receive", false);
    const json& a = e.at("action");
    std::string type = a.at("type").get<std::string>();
    if (type == "prepare") {
        Prepare p;
        for (const auto& s : a.at("subsystems"))
            p.subsystems.push_back({SubsystemId{s.at("id").get<std::string>()}, parse_spec(s)});
        p.amplitudes = parse_vector(a.at("amplitudes"));
        ev.action = std::move(p);
    } else if (type == "apply_local") {
        ApplyLocal al;
        for (const auto& t : a.at("targets")) al.targets.push_back({t.get<std::string>()});
        al.unitary = parse_matrix(a.at("unitary"));
        ev.action = std::move(al);
    } else if (type == "wait") {
        ev.action = Wait{};
    } else if (type == "send") {
        ev.action = Send{{a.at("subsystem").get<std::string>()}, a.at("transit").get<double>()};
    } else if (type == "receive") {
        ev.action = Receive{{a.at("subsystem").get<std::string>()}};
    } else if (type == "measure") {
        ev.action = Measure{{a.at("target").get<std::string>()}, parse_basis(a.at("basis")),
                            a.value("label", std::string("m"))};
    } else if (type == "post_select") {
        ev.action = PostSelect{{a.at("target").get<std::string>()}, parse_basis(a.at("basis")),
                               a.at("outcome").get<int>()};
    } else {
        throw std::invalid_argument("unknown action type '" + type + "'");
    }
    return ev;
}

void parse_channel(const json& ch, ScenarioConfig& c, std::vector<std::string>& errors) {
    std::string model = ch.value("model", std::string());
    c.channel_name = model;
    if (model == "noiseless") {
        double d = ch.value("delay", 0.0);
        if (d < 0.0) errors.push_back("channel.delay: must be >= 0, got " + num17(d));
        c.channel_model = Noiseless{d};
        c.channel_value = d;
    } else if (model == "mixture") {
        double eps = ch.value("epsilon", -1.0);
        if (eps < 0.0 || eps > 1.0)
            errors.push_back("channel.epsilon: must lie in [0,1], got " + num17(eps));
        else
            c.channel_model = Mixture{eps};
        c.channel_value = eps;
    } else if (model == "random_delay") {
        double sigma = ch.value("sigma", -1.0);
        std::string dist = ch.value("distribution", std::string("gaussian"));
        if (sigma < 0.0) errors.push_back("channel.sigma: must be >= 0, got " + num17(sigma));
        if (dist != "gaussian" && dist != "uniform")
            errors.push_back("channel.distribution: must be gaussian or uniform, got '" + dist + "'");
        else if (sigma >= 0.0)
            c.channel_model = RandomDelay{
                sigma, dist == "gaussian" ? DelayDist::Gaussian : DelayDist::Uniform};
        c.channel_value = sigma;
    } else if (model == "fully_random") {
        c.channel_model = FullyRandom{};
        c.channel_value = 1.0;
    } else {
        errors.push_back("channel.model: unknown model '" + model +
                         "' (noiseless, mixture, random_delay, fully_random)");
    }
}

PhaseModel sweep_model(const std::string& channel_name, double value) {
    if (channel_name == "mixture") return Mixture{value};
    if (channel_name == "random_delay") return RandomDelay{value};
    if (channel_name == "noiseless") return Noiseless{value};
    return FullyRandom{};
}

void parse_scenario(const json& sc, ScenarioConfig& c, std::vector<std::string>& errors) {
    std::string name = sc.value("name", std::string());
    c.scenario_name = name;
    c.scenario_json = sc.dump();
    try {
        if (name == "eddington") {
            c.timeline = scenario_eddington(sc.value("omega", 1.0), sc.value("transit", 1.0),
                                            sc.value("measure_delay", 1.0),
                                            sc.value("measured", true));
        } else if (name == "einstein") {
            c.timeline = scenario_einstein(sc.value("transit_out", 1.0),
                                           sc.value("transit_back", 1.0),
                                           sc.value("bob_dwell", 0.0));
            c.party = Actor::Alice;
        } else if (name == "entangled") {
            std::optional<EnergySpec> spec_b;
            Matrix chi = parse_matrix(sc.at("chi"));
            if (sc.value("degenerate_b", false))
                spec_b = EnergySpec::degenerate(1.0, static_cast<int>(chi.cols()));
            c.timeline = scenario_entangled_distribution(chi, sc.value("transit", 1.0),
                                                         sc.value("bob_wait", 1.0), std::nullopt,
                                                         spec_b);
        } else if (name == "inline") {
            for (const auto& e : sc.at("events")) c.timeline.events.push_back(parse_event(e));
            c.timeline.validate();
        } else {
            errors.push_back("scenario.name: unknown scenario '" + name +
                             "' (eddington, einstein, entangled, inline)");
        }
    } catch (const std::exception& ex) {
        errors.push_back("scenario: " + std::string(ex.what()));
    }
}

}  // namespace

ParseResult parse_config(const std::string& text) {
    ParseResult res;
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& ex) {
        res.errors.push_back(std::string("invalid JSON: ") + ex.what());
        return res;
    }
    ScenarioConfig c;
    auto& errors = res.errors;

    if (!j.contains("channel") || !j["channel"].is_object())
        errors.push_back("channel: missing section");
    else
        parse_channel(j["channel"], c, errors);

    if (!j.contains("scenario") || !j["scenario"].is_object())
        errors.push_back("scenario: missing section");
    else
        parse_scenario(j["scenario"], c, errors);

    if (!j.contains("frame") || !j["frame"].is_object()) {
        errors.push_back("frame: missing section (need delta or delta_grid)");
    } else {
        const json& f = j["frame"];
        if (f.contains("delta_grid")) {
            for (const auto& d : f["delta_grid"]) c.delta_grid.push_back(d.get<double>());
            if (c.delta_grid.empty()) errors.push_back("frame.delta_grid: must be nonempty");
        } else if (f.contains("delta")) {
            c.delta_grid.push_back(f["delta"].get<double>());
        } else {
            errors.push_back("frame: need delta or delta_grid");
        }
    }

    std::string mode = j.contains("run") ? j["run"].value("mode", std::string()) : std::string();
    if (mode == "exact") {
        c.sampled = false;
    } else if (mode == "sampled") {
        c.sampled = true;
        c.shots = j["run"].value("shots", 0L);
        if (c.shots < 1) errors.push_back("run.shots: sampled mode needs shots >= 1");
    } else {
        errors.push_back("run.mode: must be exact or sampled");
    }

    if (j.contains("party")) {
        try {
            c.party = parse_actor(j["party"]);
        } catch (const std::exception& ex) {
            errors.push_back("party: " + std::string(ex.what()));
        }
    }

    if (j.contains("seed")) {
        c.seed = j["seed"].get<std::uint64_t>();
        c.has_seed = true;
    }
    if (c.sampled && !c.has_seed) errors.push_back("seed: required in sampled mode");

    if (j.contains("sweep")) {
        c.has_sweep = true;
        c.sweep_parameter = j["sweep"].value("parameter", std::string());
        if (j["sweep"].contains("grid"))
            for (const auto& v : j["sweep"]["grid"]) c.sweep_grid.push_back(v.get<double>());
        if (c.sweep_grid.empty()) errors.push_back("sweep.grid: must be nonempty");
        std::string expected = c.channel_name == "mixture"       ? "epsilon"
                               : c.channel_name == "random_delay" ? "sigma"
                               : c.channel_name == "noiseless"    ? "delay"
                                                                  : "";
        if (expected.empty() || c.sweep_parameter != expected)
            errors.push_back("sweep.parameter: '" + c.sweep_parameter +
                             "' does not exist in this config (channel '" + c.channel_name + "')");
        for (double v : c.sweep_grid) {
            try {
                validate(sweep_model(c.channel_name, v));
            } catch (const std::exception& ex) {
                errors.push_back("sweep.grid: " + std::string(ex.what()));
            }
        }
    }

    if (j.contains("mle")) {
        if (j["mle"].contains("grid"))
            for (const auto& v : j["mle"]["grid"]) c.mle_grid.push_back(v.get<double>());
        if (c.mle_grid.empty()) errors.push_back("mle.grid: must be nonempty");
        if (!c.sampled) errors.push_back("mle: requires sampled run mode");
    }

    if (j.contains("output")) {
        c.format = j["output"].value("format", std::string("csv"));
        if (c.format != "csv" && c.format != "json")
            errors.push_back("output.format: must be csv or json, got '" + c.format + "'");
    }

    if (errors.empty()) res.config = std::move(c);
    return res;
}

std::string serialize(const ScenarioConfig& c) {
    json j;
    j["scenario"] = json::parse(c.scenario_json);
    json ch;
    ch["model"] = c.channel_name;
    if (c.channel_name == "mixture") ch["epsilon"] = c.channel_value;
    if (c.channel_name == "random_delay") {
        ch["sigma"] = c.channel_value;
        ch["distribution"] =
            std::get<RandomDelay>(c.channel_model).dist == DelayDist::Gaussian ? "gaussian"
                                                                               : "uniform";
    }
    if (c.channel_name == "noiseless") ch["delay"] = c.channel_value;
    j["channel"] = ch;
    if (c.delta_grid.size() == 1)
        j["frame"]["delta"] = c.delta_grid.front();
    else
        j["frame"]["delta_grid"] = c.delta_grid;
    j["run"]["mode"] = c.sampled ? "sampled" : "exact";
    if (c.sampled) j["run"]["shots"] = c.shots;
    if (c.has_sweep) {
        j["sweep"]["parameter"] = c.sweep_parameter;
        j["sweep"]["grid"] = c.sweep_grid;
    }
    if (!c.mle_grid.empty()) j["mle"]["grid"] = c.mle_grid;
    j["party"] = to_string(c.party);
    j["output"]["format"] = c.format;
    if (c.has_seed) j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

namespace {

struct ResultRow {
    double noise_value = 0.0;
    double delta = 0.0;
    std::optional<double> trace_distance_max;
    std::optional<double> qfi;
    std::optional<double> mle_estimate;
    std::optional<double> mle_stderr;
    std::optional<long> shots;
};

std::string opt17(const std::optional<double>& v) { return v ? num17(*v) : ""; }

}  // namespace

int execute(const ScenarioConfig& config, const ExecuteOptions& opts, std::ostream& summary) {
    namespace fs = std::filesystem;
    const std::string format = opts.format.value_or(config.format);
    const std::uint64_t seed = opts.seed.value_or(config.seed);
    fs::create_directories(opts.out_dir);

    std::vector<std::pair<double, PhaseModel>> rows;
    if (config.has_sweep) {
        for (double v : config.sweep_grid) rows.emplace_back(v, sweep_model(config.channel_name, v));
    } else {
        rows.emplace_back(config.channel_value, config.channel_model);
    }

    std::vector<ResultRow> results;
    json jstates = json::array();
    std::ofstream states_csv;
    if (format == "csv") {
        states_csv.open(fs::path(opts.out_dir) / "states.csv");
        states_csv << "noise_value,delta,row,col,re,im\n";
    }

    const double mid = config.delta_grid[config.delta_grid.size() / 2];
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        const auto& [noise, model] = rows[ri];
        Timeline tl = with_model(config.timeline, model);
        ResultRow out;
        out.noise_value = noise;
        out.delta = mid;

        std::vector<Matrix> states;
        for (double d : config.delta_grid) states.push_back(party_state(tl, d, config.party));
        if (config.delta_grid.size() >= 2) {
            double td = 0.0;
            for (std::size_t i = 0; i < states.size(); ++i)
                for (std::size_t j = i + 1; j < states.size(); ++j)
                    td = std::max(td, trace_distance(states[i], states[j]));
            out.trace_distance_max = td;
        }
        out.qfi =
            qfi([&](double d) { return party_state(tl, d, config.party); }, mid).qfi;

        if (config.sampled && !config.mle_grid.empty()) {
            OffsetEstimate est =
                mle_offset(tl, mid, config.shots, config.mle_grid, derive_seed(seed, ri));
            out.mle_estimate = est.estimate;
            out.mle_stderr = est.std_error;
            out.shots = config.shots;
        } else if (config.sampled) {
            out.shots = config.shots;
        }

        for (std::size_t di = 0; di < config.delta_grid.size(); ++di) {
            const Matrix& m = states[di];
            for (int r = 0; r < m.rows(); ++r) {
                for (int cc = 0; cc < m.cols(); ++cc) {
                    if (format == "csv") {
                        states_csv << num17(noise) << ',' << num17(config.delta_grid[di]) << ','
                                   << r << ',' << cc << ',' << num17(m(r, cc).real()) << ','
                                   << num17(m(r, cc).imag()) << '\n';
                    } else {
                        jstates.push_back({{"noise_value", noise},
                                           {"delta", config.delta_grid[di]},
                                           {"row", r},
                                           {"col", cc},
                                           {"re", m(r, cc).real()},
                                           {"im", m(r, cc).imag()}});
                    }
                }
            }
        }

        summary << "noise_value=" << num17(noise) << " delta=" << num17(mid);
        if (out.trace_distance_max)
            summary << " trace_distance_max=" << num17(*out.trace_distance_max);
        summary << " qfi=" << num17(*out.qfi);
        if (out.mle_estimate)
            summary << " mle_estimate=" << num17(*out.mle_estimate)
                    << " mle_stderr=" << num17(*out.mle_stderr);
        summary << '\n';
        results.push_back(out);
    }

    // Outcome table for the base channel at the midpoint offset.
    Timeline tl0 = with_model(config.timeline, rows.front().second);
    std::vector<OutcomeRow> outcome_rows;
    if (config.sampled) {
        auto recs = run_sampled(with_delta(tl0, mid), config.shots, seed);
        for (const auto& r : recs)
            outcome_rows.insert(outcome_rows.end(), r.outcomes.begin(), r.outcomes.end());
    } else {
        RunRecord rec = run_exact(with_delta(tl0, mid));
        outcome_rows = rec.outcomes;
    }

    if (format == "csv") {
        std::ofstream res_csv(fs::path(opts.out_dir) / "results.csv");
        res_csv << "noise_value,delta,trace_distance_max,qfi,mle_estimate,mle_stderr,shots\n";
        for (const auto& r : results) {
            res_csv << num17(r.noise_value) << ',' << num17(r.delta) << ','
                    << opt17(r.trace_distance_max) << ',' << opt17(r.qfi) << ','
                    << opt17(r.mle_estimate) << ',' << opt17(r.mle_stderr) << ','
                    << (r.shots ? std::to_string(*r.shots) : "") << '\n';
        }
        std::ofstream out_csv(fs::path(opts.out_dir) / "outcomes.csv");
        out_csv << "actor,label,pti,outcome,probability\n";
        for (const auto& o : outcome_rows)
            out_csv << to_string(o.actor) << ',' << o.label << ',' << num17(o.pti) << ','
                    << o.outcome << ',' << num17(o.probability) << '\n';
    } else {
        json jres = json::array();
        for (const auto& r : results) {
            json row;
            row["noise_value"] = r.noise_value;
            row["delta"] = r.delta;
            row["trace_distance_max"] =
                r.trace_distance_max ? json(*r.trace_distance_max) : json();
            row["qfi"] = r.qfi ? json(*r.qfi) : json();
            row["mle_estimate"] = r.mle_estimate ? json(*r.mle_estimate) : json();
            row["mle_stderr"] = r.mle_stderr ? json(*r.mle_stderr) : json();
            row["shots"] = r.shots ? json(*r.shots) : json();
            jres.push_back(row);
        }
        std::ofstream(fs::path(opts.out_dir) / "results.json") << jres.dump(2) << "\n";
        std::ofstream(fs::path(opts.out_dir) / "states.json") << jstates.dump(2) << "\n";
        json jout = json::array();
        for (const auto& o : outcome_rows)
            jout.push_back({{"actor", to_string(o.actor)},
                            {"label", o.label},
                            {"pti", o.pti},
                            {"outcome", o.outcome},
                            {"probability", o.probability}});
        std::ofstream(fs::path(opts.out_dir) / "outcomes.json") << jout.dump(2) << "\n";
    }
    return 0;
}

}  // namespace clocksync
