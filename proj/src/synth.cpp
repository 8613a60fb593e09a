#include "ntl/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ntl/error.hpp"
#include "ntl/ingest.hpp"

namespace ntl::synth {

namespace {

using json = nlohmann::json;

// Independent stream per (seed, purpose, index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t purpose, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose,
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64{seq};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>{lo, hi}(rng);
}

class NetworkBuilder {
  public:
    NetworkBuilder(std::uint64_t seed, const NetworkModel& model) : rng_(make_rng(seed, 0, 0)), model_(model) {
        data_.buses.push_back({"Busbar_LV", grid::PhaseConfig::three_phase, 230.0});
        data_.slack.push_back({"Busbar_LV", 1.0});
    }

    void add_feeder(int buses, int meters) {
        std::vector<std::string> trunk;
        auto trunk_parent = [&](std::size_t i) -> std::string {
            if (i == 0) {
                return data_.buses.front().id;
            }
            if (uniform(rng_, 0.0, 1.0) < 0.75) {
                return trunk[i - 1];
            }
            return trunk[std::uniform_int_distribution<std::size_t>{0, i - 1}(rng_)];
        };

        if (meters == buses) {
            for (int i = 0; i < buses; ++i) {
                const auto parent = trunk_parent(trunk.size());
                trunk.push_back(add_bus(parent, grid::PhaseConfig::three_phase, false));
                add_meter(trunk.back(), grid::Connection::three_phase);
            }
            return;
        }

        const int spare = buses - meters;
        const int trunk_count = std::clamp(static_cast<int>(std::lround(spare * model_.trunk_share)), 1, spare);
        for (int i = 0; i < trunk_count; ++i) {
            const auto parent = trunk_parent(trunk.size());
            trunk.push_back(add_bus(parent, grid::PhaseConfig::three_phase, false));
        }
        std::vector<int> extra(static_cast<std::size_t>(meters), 0);
        std::uniform_int_distribution<int> pick_meter{0, meters - 1};
        for (int i = 0; i < spare - trunk_count; ++i) {
            ++extra[static_cast<std::size_t>(pick_meter(rng_))];
        }
        std::uniform_int_distribution<std::size_t> pick_trunk{0, trunk.size() - 1};
        for (int m = 0; m < meters; ++m) {
            auto phases = grid::PhaseConfig::three_phase;
            if (uniform(rng_, 0.0, 1.0) < model_.single_phase_share) {
                constexpr std::array<grid::PhaseConfig, 3> kSingle = {
                    grid::PhaseConfig::single_phase_a, grid::PhaseConfig::single_phase_b,
                    grid::PhaseConfig::single_phase_c};
                phases = kSingle[std::uniform_int_distribution<std::size_t>{0, 2}(rng_)];
            }
            std::string at = trunk[pick_trunk(rng_)];
            for (int k = 0; k <= extra[static_cast<std::size_t>(m)]; ++k) {
                at = add_bus(at, phases, true);
            }
            add_meter(at, phases == grid::PhaseConfig::three_phase ? grid::Connection::three_phase
                                                                   : grid::Connection::single_phase);
        }
    }

    grid::NetworkData take() { return std::move(data_); }

  private:
    std::string add_bus(const std::string& parent, grid::PhaseConfig phases, bool service) {
        const auto id = fmt::format("Terminal_{:04}", data_.buses.size());
        data_.buses.push_back({id, phases, 230.0});
        const double r = service ? uniform(rng_, model_.service_r_min, model_.service_r_max)
                                 : uniform(rng_, model_.trunk_r_min, model_.trunk_r_max);
        const double x = r * uniform(rng_, model_.x_over_r_min, model_.x_over_r_max);
        // Roughly 0.2 ohm/km of cable.
        const double length = std::round(r / 0.0002 * 10.0) / 10.0;
        data_.branches.push_back(
            {fmt::format("Line_{:04}", data_.branches.size() + 1), parent, id, r, x, length});
        return id;
    }

    void add_meter(const std::string& bus, grid::Connection connection) {
        data_.meters.push_back({fmt::format("meter_{}", data_.meters.size() + 1), bus, connection, std::nullopt});
    }

    std::mt19937_64 rng_;
    NetworkModel model_;
    grid::NetworkData data_;
};

grid::Network build_network(std::span<const std::pair<int, int>> feeders, std::uint64_t seed,
                            const NetworkModel& model) {
    NetworkBuilder builder(seed, model);
    for (const auto& [buses, meters] : feeders) {
        builder.add_feeder(buses, meters);
    }
    return grid::Network::build(builder.take());
}

// Relative household demand by local hour of day: a morning and a larger
// evening peak over a night-time base.
double daily_shape(double hour) {
    auto bump = [hour](double centre, double width) {
        double d = std::fmod(std::abs(hour - centre), 24.0);
        d = std::min(d, 24.0 - d);
        return std::exp(-d * d / (2.0 * width * width));
    };
    return 0.35 + 0.6 * bump(7.5, 1.2) + 1.3 * bump(20.0, 1.8);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace

grid::Network generate_network(int n_feeders, int buses_per_feeder, double meter_fraction, std::uint64_t seed,
                               const NetworkModel& model) {
    if (n_feeders < 1 || buses_per_feeder < 1 || !(meter_fraction > 0.0 && meter_fraction <= 1.0)) {
        throw Error("generate_network: feeders and buses must be positive, meter fraction in (0, 1]");
    }
    const int meters =
        std::clamp(static_cast<int>(std::lround(meter_fraction * buses_per_feeder)), 1, buses_per_feeder);
    std::vector<std::pair<int, int>> feeders(static_cast<std::size_t>(n_feeders), {buses_per_feeder, meters});
    return build_network(feeders, seed, model);
}

grid::Network generate_network(const GridShape& shape, std::uint64_t seed, const NetworkModel& model) {
    const int n = shape.n_feeders;
    const int buses = shape.total_buses - 1;
    if (n < 1 || buses < n || shape.total_meters < n || shape.total_meters > buses) {
        throw Error(fmt::format("generate_network: cannot split {} buses and {} meters over {} feeders",
                                shape.total_buses, shape.total_meters, n));
    }
    std::vector<std::pair<int, int>> feeders;
    for (int f = 0; f < n; ++f) {
        const int b = buses / n + (f < buses % n ? 1 : 0);
        const int m = shape.total_meters / n + (f < shape.total_meters % n ? 1 : 0);
        if (m > b) {
            throw Error("generate_network: more meters than buses on a feeder");
        }
        feeders.emplace_back(b, m);
    }
    return build_network(feeders, seed, model);
}

std::optional<std::size_t> LoadSeries::meter_index(std::string_view id) const {
    auto it = std::find(meter_ids.begin(), meter_ids.end(), id);
    if (it == meter_ids.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - meter_ids.begin());
}

int LoadSeries::day_of_hour(int h) const {
    return static_cast<int>((clock.day_of(hour_start(h)) - first_day()).count());
}

LoadSeries generate_baseline_loads(const grid::Network& network, int n_days, std::uint64_t seed, Date first_day,
                                   const DayClock& clock, const LoadModel& model) {
    if (n_days < 1) {
        throw Error("generate_baseline_loads: n_days must be at least 1");
    }
    LoadSeries out;
    out.clock = clock;
    out.start = clock.day_start(first_day);
    out.hours = 24 * n_days;
    const auto meters = network.meters();
    for (std::size_t m = 0; m < meters.size(); ++m) {
        auto rng = make_rng(seed, 1, m);
        std::normal_distribution<double> normal;
        double scale = model.median_kw * std::exp(model.scale_sigma * normal(rng));
        if (meters[m].connection == grid::Connection::three_phase) {
            scale *= model.three_phase_factor;
        }
        const double shift = uniform(rng, -1.0, 1.0);
        std::vector<double> series(static_cast<std::size_t>(out.hours));
        for (int h = 0; h < out.hours; ++h) {
            const auto local = out.hour_start(h) + clock.offset();
            const auto day = std::chrono::floor<std::chrono::days>(local);
            const double hour = std::chrono::duration<double, std::ratio<3600>>(local - day).count() + 0.5;
            const std::chrono::weekday wd{Date{day.time_since_epoch()}};
            const double week = (wd == std::chrono::Saturday || wd == std::chrono::Sunday) ? model.weekend_factor : 1.0;
            const double noise =
                std::exp(model.hourly_sigma * normal(rng) - 0.5 * model.hourly_sigma * model.hourly_sigma);
            series[static_cast<std::size_t>(h)] = scale * daily_shape(hour - shift) * week * noise;
        }
        out.meter_ids.push_back(meters[m].id);
        out.kw.push_back(std::move(series));
    }
    return out;
}

std::string_view to_string(Schedule schedule) {
    switch (schedule) {
        case Schedule::continuous: return "continuous";
        case Schedule::nightly: return "nightly";
        case Schedule::random_hours: return "random_hours";
    }
    return "?";
}

std::optional<Schedule> parse_schedule(std::string_view text) {
    for (auto s : {Schedule::continuous, Schedule::nightly, Schedule::random_hours}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

FraudResult inject_fraud(const LoadSeries& actual, std::span<const FraudScenario> scenarios, std::uint64_t seed) {
    const Date first = actual.first_day();
    const Date last = first + std::chrono::days{actual.day_count()};
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& s = scenarios[i];
        if (!actual.meter_index(s.meter_id)) {
            throw ValidationError("fraud scenario references unknown meter '" + s.meter_id + "'");
        }
        if (!(s.start_day < s.end_day) || s.start_day < first || s.end_day > last) {
            throw ValidationError("fraud window for '" + s.meter_id + "' is empty or outside the series");
        }
        const bool kw = s.unreported_kw.has_value();
        const bool frac = s.unreported_fraction.has_value();
        if (kw == frac || (kw && !(*s.unreported_kw > 0.0)) ||
            (frac && !(*s.unreported_fraction > 0.0 && *s.unreported_fraction < 1.0))) {
            throw ValidationError("fraud on '" + s.meter_id +
                                  "' needs exactly one positive unreported_kw or unreported_fraction in (0, 1)");
        }
        if (s.schedule == Schedule::random_hours && !(s.hour_probability > 0.0 && s.hour_probability <= 1.0)) {
            throw ValidationError("random_hours probability must be in (0, 1]");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = scenarios[j];
            if (o.meter_id == s.meter_id && s.start_day < o.end_day && o.start_day < s.end_day) {
                throw ValidationError("overlapping fraud scenarios on meter '" + s.meter_id + "'");
            }
        }
    }

    FraudResult out{actual, actual};
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& s = scenarios[i];
        auto& row = out.actual.kw[*actual.meter_index(s.meter_id)];
        auto rng = make_rng(seed, 2, i);
        std::bernoulli_distribution coin{s.schedule == Schedule::random_hours ? s.hour_probability : 1.0};
        const auto h0 = static_cast<int>((actual.clock.day_start(s.start_day) - actual.start) / std::chrono::hours{1});
        const auto h1 = static_cast<int>((actual.clock.day_start(s.end_day) - actual.start) / std::chrono::hours{1});
        for (int h = h0; h < h1; ++h) {
            bool active = true;
            if (s.schedule == Schedule::nightly) {
                const auto local = actual.hour_start(h) + actual.clock.offset();
                const auto hour = (local - std::chrono::floor<std::chrono::days>(local)) / std::chrono::hours{1};
                active = hour >= 22 || hour < 6;
            } else if (s.schedule == Schedule::random_hours) {
                active = coin(rng);
            }
            if (!active) {
                continue;
            }
            auto& v = row[static_cast<std::size_t>(h)];
            v = s.unreported_kw ? v + *s.unreported_kw : v / (1.0 - *s.unreported_fraction);
        }
    }
    return out;
}

std::vector<FraudScenario> plan_frauds(const grid::Network& network, const LoadSeries& loads, int count,
                                       double fraction_min, double fraction_max, std::uint64_t seed) {
    if (count < 0 || !(fraction_min > 0.0 && fraction_min <= fraction_max)) {
        throw Error("plan_frauds: invalid count or fraction range");
    }
    std::map<int, std::vector<std::size_t>> by_feeder;  // feeder -> rows of `loads`
    for (std::size_t m = 0; m < loads.meter_ids.size(); ++m) {
        const auto meter = network.meter_index(loads.meter_ids[m]);
        by_feeder[network.feeder_of(network.meter_bus(meter))].push_back(m);
    }
    std::vector<int> feeders;
    for (const auto& [f, rows] : by_feeder) {
        feeders.push_back(f);
    }
    if (static_cast<std::size_t>(count) > feeders.size()) {
        throw Error(fmt::format("plan_frauds: {} frauds need distinct feeders but only {} are metered", count,
                                feeders.size()));
    }
    auto rng = make_rng(seed, 4, 0);
    std::shuffle(feeders.begin(), feeders.end(), rng);
    feeders.resize(static_cast<std::size_t>(count));
    std::sort(feeders.begin(), feeders.end());

    std::vector<FraudScenario> out;
    for (int f : feeders) {
        const auto& rows = by_feeder[f];
        double total = 0.0;
        for (auto m : rows) {
            for (double v : loads.kw[m]) {
                total += v;
            }
        }
        const double mean = total / loads.hours;
        const auto chosen = rows[std::uniform_int_distribution<std::size_t>{0, rows.size() - 1}(rng)];
        FraudScenario s;
        s.meter_id = loads.meter_ids[chosen];
        s.start_day = loads.first_day();
        s.end_day = loads.first_day() + std::chrono::days{loads.day_count()};
        s.unreported_kw = uniform(rng, fraction_min, fraction_max) * mean;
        out.push_back(std::move(s));
    }
    return out;
}

Measurements synthesize_measurements(const grid::Network& network, const LoadSeries& actual,
                                     const LoadSeries& metered, const SamplingModel& sampling,
                                     const NoiseModel& noise, std::uint64_t seed,
                                     const MeasurementOptions& options) {
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(sampling.dropout_probability) || !(sampling.reads_per_hour_mean >= 0.0)) {
        throw Error("sampling model: dropout must be in [0, 1] and reads per hour non-negative");
    }
    if (!(noise.intra_hour_load_cv >= 0.0) || !(noise.meter_voltage_noise_sd >= 0.0)) {
        throw Error("noise model parameters must be non-negative");
    }
    if (options.sub_intervals < 1) {
        throw Error("sub_intervals must be at least 1");
    }
    if (actual.meter_ids != metered.meter_ids || actual.hours != metered.hours || actual.start != metered.start) {
        throw Error("actual and metered load series differ in shape");
    }
    if (!(options.power_factor > 0.0 && options.power_factor <= 1.0)) {
        throw Error("power factor must be in (0, 1]");
    }

    const auto pu = grid::to_per_unit(network, options.bases);
    const double tan_phi = std::tan(std::acos(options.power_factor));
    const std::size_t n_series = actual.meter_ids.size();
    std::vector<std::size_t> net_index(n_series);
    std::vector<double> nominal(n_series);
    for (std::size_t m = 0; m < n_series; ++m) {
        net_index[m] = network.meter_index(actual.meter_ids[m]);
        nominal[m] = network.buses()[network.meter_bus(net_index[m])].v_nominal;
    }

    Measurements out;
    std::vector<ingest::EnergyReading> energy;
    energy.reserve(n_series * static_cast<std::size_t>(metered.hours));
    for (int h = 0; h < metered.hours; ++h) {
        for (std::size_t m = 0; m < n_series; ++m) {
            const double p = metered.kw[m][static_cast<std::size_t>(h)];
            energy.push_back({metered.meter_ids[m], metered.hour_start(h), p, p * tan_phi});
        }
    }
    out.energy_rows = energy.size();
    out.energy_csv = ingest::write_energy_csv(energy);

    const int k_sub = options.sub_intervals;
    const auto sub_length = std::chrono::seconds{3600} / k_sub;
    const int days = actual.day_count();
    std::vector<std::vector<ingest::VoltageReading>> by_day(static_cast<std::size_t>(days));

    parallel_for(static_cast<std::size_t>(days), options.threads, [&](std::size_t d) {
        auto rng = make_rng(seed, 3, d);
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<int> instant{0, 3599};
        std::bernoulli_distribution keep{1.0 - sampling.dropout_probability};
        const double whole = std::floor(sampling.reads_per_hour_mean);
        std::bernoulli_distribution extra_read{sampling.reads_per_hour_mean - whole};

        std::vector<powerflow::PowerKw> loads(network.meters().size());
        std::vector<std::vector<double>> factors(n_series, std::vector<double>(static_cast<std::size_t>(k_sub)));
        std::vector<std::vector<double>> volts(n_series, std::vector<double>(static_cast<std::size_t>(k_sub)));
        auto& rows = by_day[d];

        for (int hh = 0; hh < 24; ++hh) {
            const int h = static_cast<int>(d) * 24 + hh;
            for (auto& f : factors) {
                double mean_z = 0.0;
                for (auto& v : f) {
                    v = normal(rng);
                    mean_z += v / k_sub;
                }
                double sum = 0.0;
                for (auto& v : f) {
                    v = std::max(0.0, 1.0 + noise.intra_hour_load_cv * (v - mean_z));
                    sum += v;
                }
                for (auto& v : f) {
                    v = sum > 0.0 ? v * (k_sub / sum) : 1.0;
                }
            }
            for (int k = 0; k < k_sub; ++k) {
                for (std::size_t m = 0; m < n_series; ++m) {
                    const double p = actual.kw[m][static_cast<std::size_t>(h)] * factors[m][static_cast<std::size_t>(k)];
                    loads[net_index[m]] = {p, p * tan_phi};
                }
                const auto ts = actual.hour_start(h) + sub_length * k;
                const auto sol = powerflow::solve_loads(pu, loads, options.solver, ts);
                if (!sol.converged) {
                    throw Error(fmt::format("ground-truth load flow did not converge for snapshot {} (sub-interval {} of {})",
                                            format_rfc3339(ts), k + 1, k_sub));
                }
                for (std::size_t m = 0; m < n_series; ++m) {
                    volts[m][static_cast<std::size_t>(k)] = powerflow::meter_voltage(sol, pu, net_index[m]);
                }
            }
            for (std::size_t m = 0; m < n_series; ++m) {
                const int attempts = static_cast<int>(whole) + (extra_read(rng) ? 1 : 0);
                for (int a = 0; a < attempts; ++a) {
                    const int offset = sampling.jitter ? instant(rng) : a * 3600 / attempts;
                    const bool kept = keep(rng);
                    const double e = noise.meter_voltage_noise_sd * normal(rng);
                    if (!kept) {
                        continue;
                    }
                    const auto k = static_cast<std::size_t>(offset * k_sub / 3600);
                    rows.push_back({actual.meter_ids[m], actual.hour_start(h) + std::chrono::seconds{offset},
                                    (volts[m][k] + e) * nominal[m], std::nullopt});
                }
            }
        }
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return std::tie(a.timestamp, a.meter_id) < std::tie(b.timestamp, b.meter_id);
        });
    });

    std::vector<ingest::VoltageReading> voltage;
    for (auto& rows : by_day) {
        voltage.insert(voltage.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
    }
    out.voltage_rows = voltage.size();
    out.voltage_csv = ingest::write_voltage_csv(voltage);
    return out;
}

Measurements synthesize_measurements(const grid::Network& network, const LoadSeries& actual,
                                     const SamplingModel& sampling, const NoiseModel& noise, std::uint64_t seed,
                                     const MeasurementOptions& options) {
    return synthesize_measurements(network, actual, actual, sampling, noise, seed, options);
}

std::string to_json(const ScenarioManifest& manifest) {
    json frauds = json::array();
    for (const auto& s : manifest.frauds) {
        json f{{"meter_id", s.meter_id},
               {"start_day", format_date(s.start_day)},
               {"end_day", format_date(s.end_day)},
               {"schedule", to_string(s.schedule)}};
        if (s.unreported_kw) {
            f["unreported_kw"] = *s.unreported_kw;
        }
        if (s.unreported_fraction) {
            f["unreported_fraction"] = *s.unreported_fraction;
        }
        if (s.schedule == Schedule::random_hours) {
            f["hour_probability"] = s.hour_probability;
        }
        frauds.push_back(std::move(f));
    }
    json doc{
        {"rng", kRngName},
        {"seed", manifest.seed},
        {"n_days", manifest.n_days},
        {"first_day", format_date(manifest.first_day)},
        {"shape",
         {{"n_feeders", manifest.shape.n_feeders},
          {"total_buses", manifest.shape.total_buses},
          {"total_meters", manifest.shape.total_meters}}},
        {"sampling",
         {{"reads_per_hour_mean", manifest.sampling.reads_per_hour_mean},
          {"dropout_probability", manifest.sampling.dropout_probability},
          {"jitter", manifest.sampling.jitter}}},
        {"noise",
         {{"intra_hour_load_cv", manifest.noise.intra_hour_load_cv},
          {"meter_voltage_noise_sd", manifest.noise.meter_voltage_noise_sd}}},
        {"sub_intervals", manifest.sub_intervals},
        {"power_factor", manifest.power_factor},
        {"frauds", std::move(frauds)},
    };
    return doc.dump(2) + "\n";
}

ScenarioManifest parse_manifest(std::string_view document) {
    try {
        const auto doc = json::parse(document);
        ScenarioManifest m;
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.n_days = doc.at("n_days").get<int>();
        auto day = [](const json& j) {
            auto d = parse_date(j.get<std::string>());
            if (!d) {
                throw ParseError("bad date '" + j.get<std::string>() + "'");
            }
            return *d;
        };
        m.first_day = day(doc.at("first_day"));
        const auto& shape = doc.at("shape");
        m.shape = {shape.at("n_feeders").get<int>(), shape.at("total_buses").get<int>(),
                   shape.at("total_meters").get<int>()};
        const auto& sampling = doc.at("sampling");
        m.sampling = {sampling.at("reads_per_hour_mean").get<double>(),
                      sampling.at("dropout_probability").get<double>(), sampling.at("jitter").get<bool>()};
        const auto& noise = doc.at("noise");
        m.noise = {noise.at("intra_hour_load_cv").get<double>(), noise.at("meter_voltage_noise_sd").get<double>()};
        m.sub_intervals = doc.at("sub_intervals").get<int>();
        m.power_factor = doc.at("power_factor").get<double>();
        for (const auto& f : doc.at("frauds")) {
            FraudScenario s;
            s.meter_id = f.at("meter_id").get<std::string>();
            s.start_day = day(f.at("start_day"));
            s.end_day = day(f.at("end_day"));
            auto schedule = parse_schedule(f.at("schedule").get<std::string>());
            if (!schedule) {
                throw ParseError("unknown fraud schedule");
            }
            s.schedule = *schedule;
            if (f.contains("unreported_kw")) {
                s.unreported_kw = f["unreported_kw"].get<double>();
            }
            if (f.contains("unreported_fraction")) {
                s.unreported_fraction = f["unreported_fraction"].get<double>();
            }
            if (f.contains("hour_probability")) {
                s.hour_probability = f["hour_probability"].get<double>();
            }
            m.frauds.push_back(std::move(s));
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario manifest: ") + e.what());
    }
}

}  // namespace ntl::synth
