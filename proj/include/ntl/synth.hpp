#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ntl/grid.hpp"
#include "ntl/powerflow.hpp"
#include "ntl/time.hpp"

namespace ntl::synth {

/// Name of the pseudo-random engine behind every generator, recorded in
/// scenario manifests.
inline constexpr std::string_view kRngName = "mt19937_64";

struct NetworkModel {
    double trunk_r_min = 0.005;  // ohm per segment
    double trunk_r_max = 0.02;
    double service_r_min = 0.02;
    double service_r_max = 0.05;
    double x_over_r_min = 0.3;
    double x_over_r_max = 1.0;
    double single_phase_share = 0.9;  // fraction of meters on a single-phase service
    double trunk_share = 0.05;        // fraction of unmetered buses forming the trunk
};

/// Exact bus and meter totals; both include every feeder, the bus total
/// also counts the slack busbar.
struct GridShape {
    int n_feeders = 12;
    int total_buses = 690;
    int total_meters = 266;
};

/// Radial network: a busbar slack feeding `n_feeders` subtrees of
/// `buses_per_feeder` buses, round(meter_fraction * buses_per_feeder) of
/// them metered. When every bus is metered each feeder is a three-phase
/// chain-biased tree; otherwise meters sit at the end of service lines
/// hanging off a chain-biased trunk. Throws ntl::Error on bad arguments.
grid::Network generate_network(int n_feeders, int buses_per_feeder, double meter_fraction, std::uint64_t seed,
                               const NetworkModel& model = {});
grid::Network generate_network(const GridShape& shape, std::uint64_t seed, const NetworkModel& model = {});

/// Hourly active power per meter; kw[m][h] belongs to meter_ids[m] over
/// the hour starting at start + h hours.
struct LoadSeries {
    Timestamp start{};
    int hours = 0;
    DayClock clock;
    std::vector<std::string> meter_ids;
    std::vector<std::vector<double>> kw;

    Timestamp hour_start(int h) const { return start + std::chrono::hours{h}; }
    std::optional<std::size_t> meter_index(std::string_view id) const;
    /// Local day containing hour `h`, counted from the first day.
    int day_of_hour(int h) const;
    int day_count() const { return hours / 24; }
    Date first_day() const { return clock.day_of(start); }

    friend bool operator==(const LoadSeries&, const LoadSeries&) = default;
};

struct LoadModel {
    double median_kw = 0.6;
    double scale_sigma = 0.5;      // lognormal spread of household scale
    double hourly_sigma = 0.25;    // lognormal hour-to-hour noise
    double three_phase_factor = 2.0;
    double weekend_factor = 1.1;
};

/// Residential profile per meter: morning and evening peaks, weekend
/// modulation, lognormal household scale and hourly noise.
LoadSeries generate_baseline_loads(const grid::Network& network, int n_days, std::uint64_t seed,
                                   Date first_day = Date{std::chrono::year{2021} / 1 / 4},
                                   const DayClock& clock = {}, const LoadModel& model = {});

enum class Schedule { continuous, nightly, random_hours };

std::string_view to_string(Schedule schedule);
std::optional<Schedule> parse_schedule(std::string_view text);

/// Unmetered consumption at one meter over local days [start_day, end_day).
/// Exactly one of unreported_kw and unreported_fraction is set; with a
/// fraction f the actual load becomes metered / (1 - f).
struct FraudScenario {
    std::string meter_id;
    Date start_day{};
    Date end_day{};
    std::optional<double> unreported_kw;
    std::optional<double> unreported_fraction;
    Schedule schedule = Schedule::continuous;
    double hour_probability = 0.5;  // random_hours only

    friend bool operator==(const FraudScenario&, const FraudScenario&) = default;
};

struct FraudResult {
    LoadSeries actual;
    LoadSeries metered;
};

/// Nightly hours are 22:00 to 06:00 local. Throws ValidationError on
/// unknown meters, windows outside the series, non-positive amounts or
/// overlapping windows on one meter.
FraudResult inject_fraud(const LoadSeries& actual, std::span<const FraudScenario> scenarios, std::uint64_t seed = 0);

/// Picks `count` meters on distinct feeders, each with a continuous
/// constant fraud of fraction U[fraction_min, fraction_max] of its
/// feeder's mean total load over the whole series.
std::vector<FraudScenario> plan_frauds(const grid::Network& network, const LoadSeries& loads, int count,
                                       double fraction_min, double fraction_max, std::uint64_t seed);

struct SamplingModel {
    double reads_per_hour_mean = 1.0;
    double dropout_probability = 0.3;
    bool jitter = true;  // uniform instant within the hour, else the hour start
};

struct NoiseModel {
    double intra_hour_load_cv = 0.15;
    double meter_voltage_noise_sd = 0.002;  // p.u.
};

struct MeasurementOptions {
    int sub_intervals = 4;
    double power_factor = 0.95;
    powerflow::SolverConfig solver;
    grid::PerUnitBases bases;
    unsigned threads = 0;  // 0 = hardware concurrency
};

struct Measurements {
    std::string energy_csv;
    std::string voltage_csv;
    std::size_t energy_rows = 0;
    std::size_t voltage_rows = 0;
};

/// Energy stream from the metered loads; voltage stream sampled from
/// ground-truth load flows of the perturbed actual loads. Throws ntl::Error
/// naming the snapshot when a ground-truth load flow does not converge.
Measurements synthesize_measurements(const grid::Network& network, const LoadSeries& actual,
                                     const LoadSeries& metered, const SamplingModel& sampling,
                                     const NoiseModel& noise, std::uint64_t seed,
                                     const MeasurementOptions& options = {});
Measurements synthesize_measurements(const grid::Network& network, const LoadSeries& actual,
                                     const SamplingModel& sampling, const NoiseModel& noise, std::uint64_t seed,
                                     const MeasurementOptions& options = {});

struct ScenarioManifest {
    std::uint64_t seed = 0;
    int n_days = 0;
    Date first_day{};
    GridShape shape;
    SamplingModel sampling;
    NoiseModel noise;
    int sub_intervals = 4;
    double power_factor = 0.95;
    std::vector<FraudScenario> frauds;
};

std::string to_json(const ScenarioManifest& manifest);
ScenarioManifest parse_manifest(std::string_view document);

}  // namespace ntl::synth
