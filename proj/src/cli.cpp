#include "ntl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ntl/error.hpp"
#include "ntl/heatmap.hpp"
#include "ntl/pipeline.hpp"
#include "ntl/service.hpp"
#include "ntl/store.hpp"
#include "ntl/synth.hpp"

namespace ntl::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
    using Error::Error;
};

void write_text(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
        throw Error("cannot write " + path.string());
    }
}

std::vector<ranking::ExclusionWindow> parse_windows(const std::vector<std::string>& specs) {
    std::vector<ranking::ExclusionWindow> out;
    for (const auto& s : specs) {
        auto w = ranking::parse_exclusion(s);
        if (!w) {
            throw UsageError("bad --exclude '" + s + "', expected YYYY-MM-DD..YYYY-MM-DD");
        }
        out.push_back(*w);
    }
    return out;
}

int validate_grid(const std::string& file, std::ostream& out) {
    const auto data = grid::parse_network(store::read_file(file));
    const auto report = grid::validate(data);
    for (const auto& c : report.checks) {
        if (c.passed) {
            out << "ok   " << c.name << '\n';
        } else {
            out << "FAIL " << c.name << ": " << fmt::format("{}", fmt::join(c.offending_ids, " ")) << '\n';
        }
    }
    if (const auto* failure = report.first_failure()) {
        throw ValidationError(fmt::format("{}: {}", failure->name, fmt::join(failure->offending_ids, " ")));
    }
    out << fmt::format("network valid: {} buses, {} branches, {} meters\n", data.buses.size(), data.branches.size(),
                       data.meters.size());
    return 0;
}

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 1;
    int feeders = 12;
    int buses = 690;
    int meters = 266;
    int days = 60;
    std::string start = "2021-01-04";
    int frauds = 0;
    double fraud_min = 0.2;
    double fraud_max = 0.4;
    synth::SamplingModel sampling;
    synth::NoiseModel noise;
    int sub_intervals = 4;
    bool no_jitter = false;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
    const auto first_day = parse_date(a.start);
    if (!first_day) {
        throw UsageError("bad --start date '" + a.start + "'");
    }
    const synth::GridShape shape{a.feeders, a.buses, a.meters};
    const auto network = synth::generate_network(shape, a.seed);
    const auto base = synth::generate_baseline_loads(network, a.days, a.seed, *first_day);
    const auto frauds = synth::plan_frauds(network, base, a.frauds, a.fraud_min, a.fraud_max, a.seed);
    const auto injected = synth::inject_fraud(base, frauds, a.seed);
    auto sampling = a.sampling;
    sampling.jitter = !a.no_jitter;
    synth::MeasurementOptions options;
    options.sub_intervals = a.sub_intervals;
    const auto m = synth::synthesize_measurements(network, injected.actual, injected.metered, sampling, a.noise,
                                                  a.seed, options);

    const fs::path dir = a.out;
    write_text(dir / "network.json", grid::dump_network(network.data()));
    write_text(dir / "energy.csv", m.energy_csv);
    write_text(dir / "voltage.csv", m.voltage_csv);
    synth::ScenarioManifest manifest{a.seed, a.days, *first_day, shape, sampling, a.noise, a.sub_intervals,
                                     options.power_factor, frauds};
    write_text(dir / "scenario.json", synth::to_json(manifest));
    write_text(dir / "config.json",
               "{\n  \"network\": \"network.json\",\n  \"energy\": \"energy.csv\",\n  \"voltage\": \"voltage.csv\",\n"
               "  \"store_root\": \"runs\"\n}\n");
    out << fmt::format("wrote {}: {} buses, {} meters, {} energy rows, {} voltage rows, {} frauds\n", dir.string(),
                       network.buses().size(), network.meters().size(), m.energy_rows, m.voltage_rows, frauds.size());
    return 0;
}

std::string describe(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) {
        return fmt::format("stage: {}", s->what());
    }
    if (dynamic_cast<const UsageError*>(&e)) {
        return fmt::format("usage: {}", e.what());
    }
    if (dynamic_cast<const ConfigError*>(&e)) {
        return fmt::format("config: {}", e.what());
    }
    if (dynamic_cast<const ValidationError*>(&e)) {
        return fmt::format("validation: {}", e.what());
    }
    if (dynamic_cast<const ParseError*>(&e)) {
        return fmt::format("parse: {}", e.what());
    }
    if (dynamic_cast<const Error*>(&e)) {
        return fmt::format("runtime: {}", e.what());
    }
    return fmt::format("internal: {}", e.what());
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Non-technical loss screening from grid simulation and smart-meter voltages", "ntl"};
    app.require_subcommand(1);

    std::string network_file;
    auto* validate = app.add_subcommand("validate-grid", "Check a network file for structural problems");
    validate->add_option("--network,network", network_file, "Network JSON file");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic network and measurement dataset");
    synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_args.seed, "Random seed");
    synth_cmd->add_option("--feeders", synth_args.feeders, "Number of feeders");
    synth_cmd->add_option("--buses", synth_args.buses, "Total buses including the busbar");
    synth_cmd->add_option("--meters", synth_args.meters, "Total meters");
    synth_cmd->add_option("--days", synth_args.days, "Number of days");
    synth_cmd->add_option("--start", synth_args.start, "First day, YYYY-MM-DD");
    synth_cmd->add_option("--frauds", synth_args.frauds, "Continuous frauds on distinct feeders");
    synth_cmd->add_option("--fraud-min", synth_args.fraud_min, "Smallest fraud as a fraction of feeder mean load");
    synth_cmd->add_option("--fraud-max", synth_args.fraud_max, "Largest fraud as a fraction of feeder mean load");
    synth_cmd->add_option("--reads-per-hour", synth_args.sampling.reads_per_hour_mean, "Mean voltage reads per hour");
    synth_cmd->add_option("--dropout", synth_args.sampling.dropout_probability, "Probability a read is lost");
    synth_cmd->add_option("--load-cv", synth_args.noise.intra_hour_load_cv, "Sub-hourly load variation");
    synth_cmd->add_option("--noise-sd", synth_args.noise.meter_voltage_noise_sd, "Voltage noise, p.u.");
    synth_cmd->add_option("--sub-intervals", synth_args.sub_intervals, "Ground-truth load flows per hour");
    synth_cmd->add_flag("--no-jitter", synth_args.no_jitter, "Read at the start of each hour");

    std::string config_file, energy_file, voltage_file, out_path;
    auto* run = app.add_subcommand("run", "Run the analysis pipeline and persist a store");
    run->add_option("--config", config_file, "Pipeline configuration JSON");
    run->add_option("--network", network_file, "Network JSON file");
    run->add_option("--energy", energy_file, "Hourly energy CSV");
    run->add_option("--voltage", voltage_file, "Voltage readings CSV");
    run->add_option("--out", out_path, "Store root directory");

    std::string run_dir, indicator = "dv_min", format;
    std::optional<std::size_t> top;
    std::vector<std::string> exclude;
    auto* heat = app.add_subcommand("heatmap", "Export a heatmap document from a store");
    heat->add_option("--run", run_dir, "Store directory of one run")->required();
    heat->add_option("--indicator", indicator, "dv_min, dv_mean or dv_max");
    heat->add_option("--top", top, "Restrict to the top ranked meters");
    heat->add_option("--exclude", exclude, "Exclusion window YYYY-MM-DD..YYYY-MM-DD");
    heat->add_option("--out", out_path, "Output file (.json or .svg)");
    heat->add_option("--format", format, "json or svg");

    auto* cand = app.add_subcommand("candidates", "Print the candidate list as CSV");
    cand->add_option("--run", run_dir, "Store directory of one run")->required();
    cand->add_option("--top", top, "Number of candidates");
    cand->add_option("--exclude", exclude, "Exclusion window YYYY-MM-DD..YYYY-MM-DD");
    cand->add_option("--out", out_path, "Output CSV file");

    std::string store_root, bind_text;
    auto* serve = app.add_subcommand("serve", "Serve stores over HTTP");
    serve->add_option("--store", store_root, "Directory holding run stores")->required();
    serve->add_option("--bind", bind_text, "host:port (default from NTL_BIND, else 127.0.0.1:8080)");

    std::vector<const char*> argv{"ntl"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: usage: " << one_line(e.what()) << '\n' << app.help();
        return 2;
    }

    try {
        if (validate->parsed()) {
            if (network_file.empty()) {
                throw UsageError("validate-grid needs a network file");
            }
            return validate_grid(network_file, out);
        }
        if (synth_cmd->parsed()) {
            return run_synth(synth_args, out);
        }
        if (run->parsed()) {
            pipeline::PipelineConfig config;
            if (!config_file.empty()) {
                config = pipeline::load_config(config_file);
            } else if (!network_file.empty() && !energy_file.empty() && !voltage_file.empty()) {
                config.network = network_file;
                config.energy = energy_file;
                config.voltage = voltage_file;
            } else {
                throw UsageError("run needs --config or all of --network, --energy, --voltage");
            }
            if (!out_path.empty()) {
                config.store_root = out_path;
            }
            const auto result = pipeline::run_pipeline(config);
            const auto& a = result.analysis;
            out << fmt::format("run {} -> {}\n", result.run_id, result.directory.string());
            out << fmt::format("snapshots {} (converged {}), meters {}, days {}, ranked {}\n", a.snapshots, a.converged,
                               a.matrix.meter_count(), a.matrix.day_count(), a.ranking.size());
            return 0;
        }
        if (heat->parsed()) {
            const auto ind = deviation::parse_indicator(indicator);
            if (!ind) {
                throw UsageError("unknown indicator '" + indicator + "'");
            }
            auto st = store::load(run_dir);
            if (heat->count("--exclude") > 0) {
                st.exclusions = parse_windows(exclude);
            }
            const auto doc = heatmap::export_heatmap(st, *ind, top);
            const bool svg = format == "svg" || (format.empty() && fs::path(out_path).extension() == ".svg");
            if (!format.empty() && format != "svg" && format != "json") {
                throw UsageError("--format must be json or svg");
            }
            const auto text = svg ? heatmap::render_svg(doc) : heatmap::to_json(doc) + "\n";
            if (out_path.empty()) {
                out << text;
            } else {
                write_text(out_path, text);
            }
            return 0;
        }
        if (cand->parsed()) {
            auto st = store::load(run_dir);
            if (cand->count("--exclude") > 0) {
                st.exclusions = parse_windows(exclude);
                st.recompute_ranking();
            }
            const auto csv = ranking::export_candidates(st.candidates(top));
            if (out_path.empty()) {
                out << csv;
            } else {
                write_text(out_path, csv);
            }
            return 0;
        }
        if (serve->parsed()) {
            if (bind_text.empty()) {
                const char* env = std::getenv("NTL_BIND");
                bind_text = env ? env : "127.0.0.1:8080";
            }
            const auto bind = service::parse_bind(bind_text);
            if (!bind) {
                throw UsageError("bad bind address '" + bind_text + "'");
            }
            out << fmt::format("serving {} on {}:{}\n", store_root, bind->host, bind->port) << std::flush;
            service::serve(store_root, *bind);
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << one_line(describe(e)) << '\n';
        return 1;
    }
    return 2;
}

}  // namespace ntl::cli
