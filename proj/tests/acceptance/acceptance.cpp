// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "../support/fixtures.hpp"
#include "../support/patterns.hpp"
#include "../support/scenario.hpp"
#include "ntl/csv.hpp"
#include "ntl/deviation.hpp"
#include "ntl/ingest.hpp"
#include "ntl/pipeline.hpp"
#include "ntl/powerflow.hpp"
#include "ntl/ranking.hpp"
#include "ntl/store.hpp"
#include "ntl/synth.hpp"

using namespace ntl;
using deviation::Indicator;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

grid::Network per_unit(const grid::NetworkData& data) {
    return grid::to_per_unit(grid::Network::build(data));
}

// A synthetic dataset analysed in memory.
struct Experiment {
    grid::Network network;
    std::vector<synth::FraudScenario> frauds;
    pipeline::Analysis analysis;
};

Experiment experiment(const synth::GridShape& shape, int days, std::uint64_t seed, int frauds,
                      const synth::SamplingModel& sampling, const synth::NoiseModel& noise, int sub_intervals = 4) {
    auto network = synth::generate_network(shape, seed);
    const auto loads = synth::generate_baseline_loads(network, days, seed);
    auto plan = synth::plan_frauds(network, loads, frauds, 0.2, 0.4, seed);
    const auto injected = synth::inject_fraud(loads, plan, seed);
    synth::MeasurementOptions options;
    options.sub_intervals = sub_intervals;
    const auto m =
        synth::synthesize_measurements(network, injected.actual, injected.metered, sampling, noise, seed, options);
    auto analysis = pipeline::analyze(network, m.energy_csv, m.voltage_csv);
    return {std::move(network), std::move(plan), std::move(analysis)};
}

Verdict loadflow_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240611);
    const powerflow::SolverConfig cfg;
    double worst = 0.0;
    int failures = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = test::random_small_case(rng);
        const auto net = per_unit(c.data);
        const auto sol = powerflow::solve_snapshot(net, test::snapshot_of(c.loads), cfg);
        if (!sol.converged) {
            ++failures;
            continue;
        }
        const auto oracle = test::oracle_voltages(c);
        for (const auto& [id, mags] : sol.voltages(net)) {
            for (std::size_t p = 0; p < 3; ++p) {
                worst = std::max(worst, std::abs(mags[p] - oracle.at(id)[p]));
            }
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && worst <= 1e-7 && secs < 10.0,
            fmt::format("200 cases, max |V - V_oracle| = {:.2e} p.u. (limit 1e-7), non-converged {}, {:.2f} s (limit 10 s)",
                        worst, failures, secs)};
}

Verdict zero_load_identity() {
    std::mt19937_64 rng(77);
    const powerflow::SolverConfig cfg;
    int inexact = 0;
    int cases = 0;
    double worst_residual = 0.0;
    int converged = 0;
    for (int i = 0; i < 200; ++i) {
        auto c = test::random_small_case(rng);
        const auto net = per_unit(c.data);
        const double slack = net.slack_voltage();

        auto zero = c.loads;
        for (auto& [id, p] : zero) {
            p = {0.0, 0.0};
        }
        const auto flat = powerflow::solve_snapshot(net, test::snapshot_of(zero), cfg);
        ++cases;
        bool exact = flat.converged;
        for (const auto& [id, mags] : flat.voltages(net)) {
            const auto mask = grid::phase_mask(c.data.buses[net.bus_index(id)].phases);
            for (std::size_t p = 0; p < 3; ++p) {
                if ((mask >> p) & 1u) {
                    exact = exact && mags[p] == slack;
                }
            }
        }
        inexact += exact ? 0 : 1;

        const auto snap = test::snapshot_of(c.loads);
        const auto sol = powerflow::solve_snapshot(net, snap, cfg);
        if (sol.converged) {
            ++converged;
            worst_residual = std::max(worst_residual, powerflow::power_balance_residual(net, snap, sol));
        }
    }
    return {inexact == 0 && worst_residual < 10 * cfg.tolerance,
            fmt::format("{}/{} zero-load cases bit-exact at slack voltage; max residual {:.2e} p.u. over {} converged "
                        "cases (limit {:.0e})",
                        cases - inexact, cases, worst_residual, converged, 10 * cfg.tolerance)};
}

Verdict pipeline_identity() {
    const auto e = experiment({3, 90, 30}, 7, 5, 0, {1.0, 0.0, false}, {0.0, 0.0}, 1);
    const auto& mx = e.analysis.matrix;
    double worst = 0.0;
    std::size_t present = 0;
    for (auto ind : deviation::kIndicators) {
        for (std::size_t m = 0; m < mx.meter_count(); ++m) {
            for (auto v : mx.row(ind, m)) {
                if (v) {
                    ++present;
                    worst = std::max(worst, std::abs(*v));
                }
            }
        }
    }
    const std::size_t expected = 3 * mx.meter_count() * mx.day_count();
    return {present == expected && present > 0 && worst <= 1e-9,
            fmt::format("{} of {} cells present, max |dV| = {:.2e} p.u. (limit 1e-9)", present, expected, worst)};
}

// Default-noise datasets without fraud, shared by the bias and envelope checks.
std::vector<Experiment>& clean_datasets(double* elapsed = nullptr) {
    static std::vector<Experiment> sets;
    static double secs = 0.0;
    if (sets.empty()) {
        const auto t0 = Clock::now();
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            sets.push_back(experiment({4, 131, 50}, 60, seed, 0, {}, {}));
        }
        secs = seconds_since(t0);
    }
    if (elapsed) {
        *elapsed = secs;
    }
    return sets;
}

Verdict bias() {
    double secs = 0.0;
    const auto& sets = clean_datasets(&secs);
    int agree = 0;
    std::string per_seed;
    for (const auto& e : sets) {
        const auto& s = e.analysis.summary;
        const bool ok = s[Indicator::dv_min].average > 0.0 &&
                        s[Indicator::dv_min].average > s[Indicator::dv_max].average &&
                        s[Indicator::dv_min].std_dev > s[Indicator::dv_mean].std_dev;
        agree += ok ? 1 : 0;
        per_seed += fmt::format(" [min {:+.4f}/{:.4f} mean {:+.4f}/{:.4f} max {:+.4f}/{:.4f}]",
                                s[Indicator::dv_min].average, s[Indicator::dv_min].std_dev,
                                s[Indicator::dv_mean].average, s[Indicator::dv_mean].std_dev,
                                s[Indicator::dv_max].average, s[Indicator::dv_max].std_dev);
    }
    return {agree >= 4 && secs < 120.0,
            fmt::format("{}/5 seeds with positive dV_min bias, dV_min > dV_max and std(dV_min) > std(dV_mean); "
                        "{:.1f} s (limit 120 s); average/std:{}",
                        agree, secs, per_seed)};
}

Verdict envelope() {
    double worst = 1.0;
    for (const auto& e : clean_datasets()) {
        for (auto ind : deviation::kIndicators) {
            worst = std::min(worst, deviation::mass_within(e.analysis.matrix, ind, 0.1));
        }
    }
    return {worst >= 0.99,
            fmt::format("smallest fraction within +/-0.1 p.u. over 5 seeds x 3 indicators: {:.4f} (limit 0.99)",
                        worst)};
}

Verdict fraud_detection() {
    const auto t0 = Clock::now();
    int found = 0;
    int total = 0;
    std::vector<std::string> missed;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto e = experiment({12, 900, 250}, 60, 1000 + seed, 5, {}, {});
        std::set<std::string> top;
        for (std::size_t i = 0; i < std::min<std::size_t>(10, e.analysis.ranking.size()); ++i) {
            top.insert(e.analysis.ranking[i].meter_id);
        }
        for (const auto& f : e.frauds) {
            ++total;
            if (top.contains(f.meter_id)) {
                ++found;
            } else {
                missed.push_back(fmt::format("{}:{}", seed, f.meter_id));
            }
        }
    }
    const double secs = seconds_since(t0);
    const double rate = static_cast<double>(found) / total;
    return {rate >= 0.9 && secs < 600.0,
            fmt::format("{}/{} frauded meters in top-10 ({:.1f}%, limit 90%); {:.1f} s (limit 600 s); missed: {}", found,
                        total, 100.0 * rate, secs, missed.empty() ? "none" : fmt::format("{}", fmt::join(missed, " ")))};
}

Verdict pattern_classifier() {
    using ranking::PatternKind;
    std::mt19937_64 rng(31337);
    int agree = 0;
    int total = 0;
    for (auto kind : {PatternKind::ceased, PatternKind::onset, PatternKind::persistent, PatternKind::intermittent,
                      PatternKind::quiet}) {
        for (int i = 0; i < 10; ++i) {
            const auto s = test::make_series(kind, rng);
            const auto p = ranking::pattern_classify(s.days, s.values);
            ++total;
            agree += (p.kind == s.kind && (!s.marker || p.date == s.marker)) ? 1 : 0;
        }
    }
    return {agree == total, fmt::format("{}/{} constructed series labelled as built", agree, total)};
}

Verdict scale() {
    test::TempDir dir("ntl-accept");
    const synth::GridShape shape{12, 690, 266};
    auto network = synth::generate_network(shape, 42);
    const auto loads = synth::generate_baseline_loads(network, 30, 42);
    const auto m = synth::synthesize_measurements(network, loads, synth::SamplingModel{}, synth::NoiseModel{}, 42);
    test::write_text(dir.path() / "network.json", grid::dump_network(network.data()));
    test::write_text(dir.path() / "energy.csv", m.energy_csv);
    test::write_text(dir.path() / "voltage.csv", m.voltage_csv);

    pipeline::PipelineConfig config;
    config.network = dir.path() / "network.json";
    config.energy = dir.path() / "energy.csv";
    config.voltage = dir.path() / "voltage.csv";
    config.store_root = dir.path() / "runs";
    const auto t0 = Clock::now();
    const auto r = pipeline::run_pipeline(config);
    const double secs = seconds_since(t0);
    const auto& a = r.analysis;
    const bool shaped = network.buses().size() == 690 && network.meters().size() == 266 && a.snapshots == 720 &&
                        a.converged == 720;
    return {shaped && secs < 60.0,
            fmt::format("{} buses, {} meters, {} snapshots ({} converged), {} ranked; ingest to store {:.1f} s on {} "
                        "hardware thread(s) (limit 60 s)",
                        network.buses().size(), network.meters().size(), a.snapshots, a.converged, a.ranking.size(),
                        secs, std::max(1u, std::thread::hardware_concurrency()))};
}

Verdict interchange() {
    std::vector<std::string> problems;

    // Candidate list from a real run.
    const auto e = experiment({3, 90, 30}, 14, 9, 2, {}, {});
    const auto csv = ranking::export_candidates(
        std::span(e.analysis.ranking).first(std::min<std::size_t>(15, e.analysis.ranking.size())));
    const auto rows = csv::lines(csv);
    if (rows.empty() || rows[0] != ranking::kCandidateHeader) {
        problems.push_back("candidate header");
    }
    const std::regex four_places(R"(-?\d+\.\d{4})");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto fields = csv::split(rows[i]);
        if (fields.size() != 8 || !std::regex_match(fields[3], four_places) ||
            !std::regex_match(fields[4], four_places) || fields[0] != std::to_string(i)) {
            problems.push_back("candidate row " + std::to_string(i));
        }
    }

    // Matrix CSV round trip: a pipeline matrix and a random one with awkward values.
    auto round_trips = [](const deviation::IndicatorMatrix& mx) {
        return deviation::from_csv(deviation::to_csv(mx, Indicator::dv_mean), deviation::to_csv(mx, Indicator::dv_min),
                                   deviation::to_csv(mx, Indicator::dv_max)) == mx;
    };
    if (!round_trips(e.analysis.matrix)) {
        problems.push_back("pipeline matrix round trip");
    }
    std::mt19937_64 rng(5);
    std::vector<std::string> ids{"a", "b,with comma", "c \"quoted\""};
    deviation::IndicatorMatrix mx(ids, test::ymd("2021-02-26"), 6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto ind : deviation::kIndicators) {
        for (std::size_t m = 0; m < ids.size(); ++m) {
            for (std::size_t d = 0; d < 6; ++d) {
                const double v = u(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-12, 2)(rng));
                mx.set(ind, m, d, d == m ? std::nullopt : std::optional<double>(v));
            }
        }
    }
    if (!round_trips(mx)) {
        problems.push_back("random matrix round trip");
    }
    return {problems.empty(),
            problems.empty()
                ? fmt::format("candidate CSV has the {} columns with 4-decimal indicators; matrix CSV round trips "
                              "bit-exactly; no UI involved",
                              csv::split(ranking::kCandidateHeader).size())
                : fmt::format("problems: {}", fmt::join(problems, ", "))};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"loadflow-oracle", loadflow_oracle},
        {"zero-load-identity", zero_load_identity},
        {"pipeline-identity", pipeline_identity},
        {"bias", bias},
        {"envelope", envelope},
        {"fraud-detection", fraud_detection},
        {"pattern-classifier", pattern_classifier},
        {"scale", scale},
        {"interchange", interchange},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& ex) {
            v = {false, std::string("exception: ") + ex.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
    return failed == 0 ? 0 : 1;
}
