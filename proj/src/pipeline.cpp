#include "ntl/pipeline.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ntl/error.hpp"
#include "ntl/store.hpp"

namespace ntl::pipeline {

namespace {

using json = nlohmann::json;

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void check_keys(const json& object, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

}  // namespace

std::vector<powerflow::LoadSnapshot> hourly_snapshots(const std::map<std::string, ingest::MeterSeries>& series,
                                                      double power_factor) {
    std::map<Timestamp, powerflow::LoadSnapshot> by_hour;
    for (const auto& [meter, s] : series) {
        for (const auto& [hour, power] : ingest::hourly_power(s, power_factor)) {
            auto& snap = by_hour[hour];
            snap.timestamp = hour;
            snap.loads.emplace(meter, power);
        }
    }
    std::vector<powerflow::LoadSnapshot> out;
    out.reserve(by_hour.size());
    for (auto& [hour, snap] : by_hour) {
        for (const auto& [meter, s] : series) {
            if (!snap.loads.contains(meter)) {
                snap.missing.insert(meter);
            }
        }
        out.push_back(std::move(snap));
    }
    return out;
}

Analysis analyze(const grid::Network& network, std::string_view energy_csv, std::string_view voltage_csv,
                 const AnalysisOptions& options) {
    Analysis out;

    auto cleaned = stage("ingest", [&] {
        auto energy = ingest::parse_energy_csv(energy_csv);
        auto voltage = ingest::parse_voltage_csv(voltage_csv);
        out.malformed_rows = energy.errors.size() + voltage.errors.size();
        std::erase_if(energy.rows, [&](const auto& r) { return !network.find_meter(r.meter_id); });
        std::erase_if(voltage.rows, [&](const auto& r) { return !network.find_meter(r.meter_id); });
        auto rules = ingest::rules_for(network);
        rules.clock = options.clock;
        rules.min_samples = options.min_samples;
        rules.gap_min_days = options.gap_min_days;
        return ingest::clean(energy.rows, voltage.rows, rules);
    });
    out.cleaning = cleaned.report;

    auto solutions = stage("loadflow", [&] {
        const auto snapshots = hourly_snapshots(cleaned.series, options.power_factor);
        out.snapshots = snapshots.size();
        const auto pu = grid::to_per_unit(network, options.bases);
        return powerflow::solve_series(pu, snapshots, options.solver, options.threads);
    });
    out.converged = static_cast<std::size_t>(
        std::count_if(solutions.begin(), solutions.end(), [](const auto& s) { return s.converged; }));

    stage("daily_stats", [&] {
        out.simulated = deviation::daily_stats_simulated(solutions, network, options.clock);
        out.measured = deviation::daily_stats_measured(cleaned.series, network, options.min_samples, options.clock);
        return 0;
    });

    stage("indicators", [&] {
        std::vector<std::string> meters;
        for (const auto& m : network.meters()) {
            meters.push_back(m.id);
        }
        out.matrix = deviation::compute_indicators(out.simulated, out.measured, std::move(meters));
        out.summary = deviation::summary_statistics(out.matrix);
        return 0;
    });

    out.ranking = stage("ranking", [&] {
        return ranking::build_candidates(out.matrix, ranking::terminals_of(network), options.exclusions,
                                         std::numeric_limits<std::size_t>::max(), options.pattern);
    });
    return out;
}

PipelineConfig parse_config(std::string_view document, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    check_keys(doc,
               {"network", "energy", "voltage", "store_root", "run_id", "timezone", "min_samples", "gap_min_days",
                "power_factor", "s_base_va", "solver", "exclusions", "top_k", "pattern", "threads"},
               "configuration");

    PipelineConfig config;
    config.source = std::string(document);
    try {
        auto path = [&](const char* key) {
            std::filesystem::path p = doc.at(key).get<std::string>();
            return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        };
        config.network = path("network");
        config.energy = path("energy");
        config.voltage = path("voltage");
        config.store_root = doc.contains("store_root") ? path("store_root")
                            : base_dir.empty()         ? std::filesystem::path("runs")
                                                       : base_dir / "runs";
        if (doc.contains("run_id")) {
            config.run_id = doc["run_id"].get<std::string>();
            if (config.run_id->empty() || config.run_id->find_first_of("/\\") != std::string::npos ||
                config.run_id->front() == '.') {
                throw ConfigError("run_id must be a plain directory name");
            }
        }
        auto& a = config.analysis;
        if (doc.contains("timezone")) {
            auto clock = DayClock::parse(doc["timezone"].get<std::string>());
            if (!clock) {
                throw ConfigError("timezone must be UTC or a fixed offset such as +01:00");
            }
            a.clock = *clock;
        }
        a.min_samples = doc.value("min_samples", a.min_samples);
        a.gap_min_days = doc.value("gap_min_days", a.gap_min_days);
        a.power_factor = doc.value("power_factor", a.power_factor);
        a.bases.s_base_va = doc.value("s_base_va", a.bases.s_base_va);
        a.threads = doc.value("threads", a.threads);
        config.top_k = doc.value("top_k", config.top_k);
        if (doc.contains("solver")) {
            const auto& s = doc["solver"];
            check_keys(s, {"tolerance", "max_iterations"}, "solver");
            a.solver.tolerance = s.value("tolerance", a.solver.tolerance);
            a.solver.max_iterations = s.value("max_iterations", a.solver.max_iterations);
        }
        if (doc.contains("pattern")) {
            const auto& p = doc["pattern"];
            check_keys(p, {"threshold", "p_hi", "tail_days", "min_hot"}, "pattern");
            a.pattern.threshold = p.value("threshold", a.pattern.threshold);
            a.pattern.p_hi = p.value("p_hi", a.pattern.p_hi);
            a.pattern.tail_days = p.value("tail_days", a.pattern.tail_days);
            a.pattern.min_hot = p.value("min_hot", a.pattern.min_hot);
        }
        if (doc.contains("exclusions")) {
            for (const auto& e : doc["exclusions"]) {
                auto window = ranking::parse_exclusion(e.get<std::string>());
                if (!window) {
                    throw ConfigError("bad exclusion window '" + e.get<std::string>() + "'");
                }
                a.exclusions.push_back(*window);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
    const auto& a = config.analysis;
    if (!(a.power_factor > 0.0 && a.power_factor <= 1.0) || !(a.bases.s_base_va > 0.0) || a.min_samples < 1 ||
        a.gap_min_days < 1 || !(a.solver.tolerance > 0.0) || a.solver.max_iterations < 1) {
        throw ConfigError("configuration value out of range");
    }
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read configuration file " + path.string());
    }
    const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(content, path.parent_path());
}

std::string dump_config(const PipelineConfig& config) {
    const auto& a = config.analysis;
    json exclusions = json::array();
    for (const auto& w : a.exclusions) {
        exclusions.push_back(ranking::to_string(w));
    }
    json doc{
        {"network", config.network.string()},
        {"energy", config.energy.string()},
        {"voltage", config.voltage.string()},
        {"store_root", config.store_root.string()},
        {"timezone", a.clock.to_string()},
        {"min_samples", a.min_samples},
        {"gap_min_days", a.gap_min_days},
        {"power_factor", a.power_factor},
        {"s_base_va", a.bases.s_base_va},
        {"solver", {{"tolerance", a.solver.tolerance}, {"max_iterations", a.solver.max_iterations}}},
        {"exclusions", std::move(exclusions)},
        {"top_k", config.top_k},
        {"pattern",
         {{"threshold", a.pattern.threshold},
          {"p_hi", a.pattern.p_hi},
          {"tail_days", a.pattern.tail_days},
          {"min_hot", a.pattern.min_hot}}},
        {"threads", a.threads},
    };
    if (config.run_id) {
        doc["run_id"] = *config.run_id;
    }
    return doc.dump(2) + "\n";
}

RunResult run_pipeline(const PipelineConfig& config) {
    const std::pair<const char*, const std::filesystem::path*> inputs[] = {
        {"network", &config.network}, {"energy", &config.energy}, {"voltage", &config.voltage}};
    for (const auto& [key, path] : inputs) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(*path, ec)) {
            throw ConfigError(fmt::format("{} file not found: {}", key, path->string()));
        }
    }

    store::AnalysisStore st;
    st.provenance.created_at = store::now();
    std::map<std::string, std::string> content;
    for (const auto& [key, path] : inputs) {
        content[key] = store::read_file(*path);
        st.provenance.input_paths[key] = path->string();
        st.provenance.input_digests[key] = store::sha256_hex(content[key]);
    }

    const auto network = stage("network", [&] { return grid::load_network(content["network"]); });
    RunResult result;
    result.analysis = analyze(network, content["energy"], content["voltage"], config.analysis);
    const auto& a = result.analysis;

    auto unnamed = config;
    unnamed.run_id.reset();
    const auto canonical = dump_config(unnamed);
    // Inputs enter the id by content, so where files live does not matter.
    auto located = unnamed;
    located.network = located.energy = located.voltage = located.store_root = std::filesystem::path{};
    result.run_id = config.run_id
                        ? *config.run_id
                        : "run-" + store::sha256_hex(st.provenance.input_digests["network"] +
                                                     st.provenance.input_digests["energy"] +
                                                     st.provenance.input_digests["voltage"] + dump_config(located))
                                       .substr(0, 12);

    st.run_id = result.run_id;
    st.terminals = ranking::terminals_of(network);
    st.matrix = a.matrix;
    st.summary = a.summary;
    st.daily_stats = a.simulated;
    st.daily_stats.insert(st.daily_stats.end(), a.measured.begin(), a.measured.end());
    st.cleaning = a.cleaning;
    st.snapshots = a.snapshots;
    st.converged = a.converged;
    st.top_k = config.top_k;
    st.pattern = config.analysis.pattern;
    st.exclusions = config.analysis.exclusions;
    st.ranking = a.ranking;
    st.provenance.config = canonical;
    st.provenance.loadflow_completed_at = store::now();
    st.provenance.ranking_updated_at = st.provenance.loadflow_completed_at;
    st.provenance.loadflow_runs = 1;

    result.directory = config.store_root / result.run_id;
    stage("store", [&] {
        std::filesystem::create_directories(config.store_root);
        store::save(st, result.directory);
        return 0;
    });
    return result;
}

}  // namespace ntl::pipeline
