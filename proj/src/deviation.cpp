#include "ntl/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ntl/csv.hpp"
#include "ntl/error.hpp"

namespace ntl::deviation {

namespace {

struct Accumulator {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    int n = 0;

    void add(double v) {
        min = std::min(min, v);
        max = std::max(max, v);
        sum += v;
        ++n;
    }
};

DailyVoltageStats finish(const std::string& meter, Date day, const Accumulator& acc, Source source) {
    // Clamp guards the mean against rounding outside [min, max].
    const double mean = std::clamp(acc.sum / acc.n, acc.min, acc.max);
    return DailyVoltageStats{meter, day, acc.min, mean, acc.max, acc.n, source};
}

struct Layer {
    std::vector<std::string> meters;
    Date first_day{};
    std::size_t day_count = 0;
    std::vector<std::optional<double>> cells;
};

Layer parse_layer(std::string_view content, std::string_view name) {
    const auto rows = csv::lines(content);
    if (rows.empty()) {
        throw ParseError(fmt::format("{}: empty matrix CSV", name));
    }
    const auto header = csv::split(rows.front());
    if (header.empty() || header.front() != "meter_id") {
        throw ParseError(fmt::format("{}: header must start with meter_id", name));
    }
    Layer layer;
    layer.day_count = header.size() - 1;
    for (std::size_t j = 1; j < header.size(); ++j) {
        auto d = parse_date(header[j]);
        if (!d) {
            throw ParseError(fmt::format("{}: invalid date column '{}'", name, header[j]));
        }
        if (j == 1) {
            layer.first_day = *d;
        } else if (*d != layer.first_day + std::chrono::days{static_cast<int>(j - 1)}) {
            throw ParseError(fmt::format("{}: day axis is not contiguous at '{}'", name, header[j]));
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].empty()) {
            continue;
        }
        auto fields = csv::split(rows[i]);
        if (fields.size() != header.size()) {
            throw ParseError(fmt::format("{}: line {} has {} fields, expected {}", name, i + 1, fields.size(),
                                         header.size()));
        }
        layer.meters.push_back(fields.front());
        for (std::size_t j = 1; j < fields.size(); ++j) {
            if (fields[j].empty()) {
                layer.cells.emplace_back();
                continue;
            }
            auto v = csv::parse_double(fields[j]);
            if (!v) {
                throw ParseError(fmt::format("{}: line {} has invalid cell '{}'", name, i + 1, fields[j]));
            }
            layer.cells.emplace_back(*v);
        }
    }
    return layer;
}

}  // namespace

std::string_view to_string(Indicator indicator) {
    switch (indicator) {
        case Indicator::dv_mean: return "dv_mean";
        case Indicator::dv_min: return "dv_min";
        case Indicator::dv_max: return "dv_max";
    }
    return "?";
}

std::optional<Indicator> parse_indicator(std::string_view text) {
    for (auto ind : kIndicators) {
        if (to_string(ind) == text) {
            return ind;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Source source) {
    return source == Source::simulated ? "simulated" : "measured";
}

std::vector<DailyVoltageStats> daily_stats_simulated(std::span<const powerflow::VoltageSolution> solutions,
                                                     const grid::Network& network, const DayClock& clock) {
    const auto n_meters = network.meters().size();
    std::vector<std::map<Date, Accumulator>> acc(n_meters);
    for (const auto& sol : solutions) {
        if (!sol.converged) {
            continue;
        }
        const Date day = clock.day_of(sol.timestamp);
        for (std::size_t m = 0; m < n_meters; ++m) {
            acc[m][day].add(powerflow::meter_voltage(sol, network, m));
        }
    }
    std::vector<DailyVoltageStats> out;
    for (std::size_t m = 0; m < n_meters; ++m) {
        for (const auto& [day, a] : acc[m]) {
            out.push_back(finish(network.meters()[m].id, day, a, Source::simulated));
        }
    }
    return out;
}

std::vector<DailyVoltageStats> daily_stats_measured(const std::map<std::string, ingest::MeterSeries>& series,
                                                    const grid::Network& network, int min_samples,
                                                    const DayClock& clock) {
    std::vector<DailyVoltageStats> out;
    for (std::size_t m = 0; m < network.meters().size(); ++m) {
        const auto& meter = network.meters()[m];
        auto it = series.find(meter.id);
        if (it == series.end()) {
            continue;
        }
        const double nominal = network.buses()[network.meter_bus(m)].v_nominal;
        std::map<Date, Accumulator> acc;
        for (const auto& r : it->second.voltage) {
            acc[clock.day_of(r.timestamp)].add(r.voltage_v / nominal);
        }
        for (const auto& [day, a] : acc) {
            if (a.n >= std::max(1, min_samples)) {
                out.push_back(finish(meter.id, day, a, Source::measured));
            }
        }
    }
    return out;
}

IndicatorMatrix::IndicatorMatrix(std::vector<std::string> meters, Date first_day, std::size_t day_count)
    : meters_(std::move(meters)), first_day_(first_day), day_count_(day_count) {
    for (auto& layer : layers_) {
        layer.assign(meters_.size() * day_count_, std::nullopt);
    }
}

std::vector<Date> IndicatorMatrix::days() const {
    std::vector<Date> out;
    out.reserve(day_count_);
    for (std::size_t j = 0; j < day_count_; ++j) {
        out.push_back(day(j));
    }
    return out;
}

std::optional<std::size_t> IndicatorMatrix::meter_index(std::string_view meter_id) const {
    auto it = std::find(meters_.begin(), meters_.end(), meter_id);
    if (it == meters_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - meters_.begin());
}

std::optional<std::size_t> IndicatorMatrix::day_index(Date d) const {
    const auto offset = (d - first_day_).count();
    if (offset < 0 || static_cast<std::size_t>(offset) >= day_count_) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(offset);
}

std::span<const std::optional<double>> IndicatorMatrix::row(Indicator indicator, std::size_t meter) const {
    const auto& layer = layers_[static_cast<std::size_t>(indicator)];
    return std::span{layer}.subspan(meter * day_count_, day_count_);
}

std::size_t IndicatorMatrix::present_count(Indicator indicator) const {
    const auto& layer = layers_[static_cast<std::size_t>(indicator)];
    return static_cast<std::size_t>(
        std::count_if(layer.begin(), layer.end(), [](const auto& c) { return c.has_value(); }));
}

IndicatorMatrix compute_indicators(std::span<const DailyVoltageStats> simulated,
                                   std::span<const DailyVoltageStats> measured, std::vector<std::string> meters) {
    std::optional<Date> lo, hi;
    for (auto set : {simulated, measured}) {
        for (const auto& s : set) {
            lo = lo ? std::min(*lo, s.day) : s.day;
            hi = hi ? std::max(*hi, s.day) : s.day;
        }
    }
    if (!lo) {
        return IndicatorMatrix{std::move(meters), Date{}, 0};
    }
    IndicatorMatrix matrix{std::move(meters), *lo, static_cast<std::size_t>((*hi - *lo).count() + 1)};

    std::map<std::pair<std::string, Date>, const DailyVoltageStats*> sim_lookup;
    for (const auto& s : simulated) {
        sim_lookup.emplace(std::make_pair(s.meter_id, s.day), &s);
    }
    for (const auto& meas : measured) {
        auto row = matrix.meter_index(meas.meter_id);
        auto it = sim_lookup.find({meas.meter_id, meas.day});
        if (!row || it == sim_lookup.end()) {
            continue;
        }
        const auto& sim = *it->second;
        const auto col = *matrix.day_index(meas.day);
        matrix.set(Indicator::dv_mean, *row, col, sim.v_mean - meas.v_mean);
        matrix.set(Indicator::dv_min, *row, col, sim.v_min - meas.v_min);
        matrix.set(Indicator::dv_max, *row, col, sim.v_max - meas.v_max);
    }
    return matrix;
}

SummaryStats summary_statistics(const IndicatorMatrix& matrix) {
    SummaryStats stats;
    for (auto ind : kIndicators) {
        std::vector<double> values;
        for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
            for (const auto& c : matrix.row(ind, m)) {
                if (c) {
                    values.push_back(*c);
                }
            }
        }
        auto& out = stats.by_indicator[static_cast<std::size_t>(ind)];
        out.count = values.size();
        if (values.empty()) {
            continue;
        }
        // Shifted by the first value: constant layers come out exact.
        const double shift = values.front();
        const double n = static_cast<double>(values.size());
        double sum = 0.0;
        for (double v : values) {
            sum += v - shift;
        }
        const double offset = sum / n;
        out.average = shift + offset;
        double ss = 0.0;
        for (double v : values) {
            ss += (v - shift - offset) * (v - shift - offset);
        }
        out.std_dev = std::sqrt(ss / n);
    }
    return stats;
}

std::size_t Histogram::total() const {
    std::size_t sum = 0;
    for (auto c : counts) {
        sum += c;
    }
    return sum;
}

Histogram histogram(const IndicatorMatrix& matrix, Indicator indicator, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw Error("histogram bin width must be positive");
    }
    // Bin index k covers [k*w, (k+1)*w); values within rounding of an edge
    // snap to it so that they land in the upper bin.
    auto bin_of = [bin_width](double v) {
        const double q = v / bin_width;
        const double r = std::round(q);
        return static_cast<long long>(std::abs(q - r) < 1e-9 ? r : std::floor(q));
    };
    std::vector<long long> bins;
    for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
        for (const auto& c : matrix.row(indicator, m)) {
            if (c) {
                bins.push_back(bin_of(*c));
            }
        }
    }
    long long reach = 1;
    for (auto k : bins) {
        reach = std::max({reach, -k, k + 1});
    }
    Histogram h;
    h.indicator = indicator;
    h.bin_width = bin_width;
    for (long long k = -reach; k <= reach; ++k) {
        h.edges.push_back(static_cast<double>(k) * bin_width);
    }
    h.counts.assign(static_cast<std::size_t>(2 * reach), 0);
    for (auto k : bins) {
        ++h.counts[static_cast<std::size_t>(k + reach)];
    }
    return h;
}

double mass_within(const IndicatorMatrix& matrix, Indicator indicator, double bound) {
    std::size_t inside = 0, total = 0;
    for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
        for (const auto& c : matrix.row(indicator, m)) {
            if (c) {
                ++total;
                inside += std::abs(*c) <= bound ? 1 : 0;
            }
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(inside) / static_cast<double>(total);
}

std::string to_csv(const IndicatorMatrix& matrix, Indicator indicator) {
    std::string out = "meter_id";
    for (std::size_t j = 0; j < matrix.day_count(); ++j) {
        out += ',';
        out += format_date(matrix.day(j));
    }
    out += '\n';
    for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
        out += csv::escape(matrix.meters()[m]);
        for (const auto& c : matrix.row(indicator, m)) {
            out += ',';
            if (c) {
                out += csv::format_double(*c);
            }
        }
        out += '\n';
    }
    return out;
}

IndicatorMatrix from_csv(std::string_view dv_mean_csv, std::string_view dv_min_csv, std::string_view dv_max_csv) {
    const std::array<Layer, 3> layers = {parse_layer(dv_mean_csv, "dv_mean"), parse_layer(dv_min_csv, "dv_min"),
                                         parse_layer(dv_max_csv, "dv_max")};
    for (const auto& l : layers) {
        if (l.meters != layers[0].meters || l.day_count != layers[0].day_count ||
            (l.day_count > 0 && l.first_day != layers[0].first_day)) {
            throw ParseError("indicator layers disagree on axes");
        }
    }
    IndicatorMatrix matrix{layers[0].meters, layers[0].first_day, layers[0].day_count};
    for (auto ind : kIndicators) {
        const auto& l = layers[static_cast<std::size_t>(ind)];
        for (std::size_t m = 0; m < l.meters.size(); ++m) {
            for (std::size_t j = 0; j < l.day_count; ++j) {
                matrix.set(ind, m, j, l.cells[m * l.day_count + j]);
            }
        }
    }
    return matrix;
}

std::string write_daily_stats_csv(std::span<const DailyVoltageStats> stats) {
    std::string out = "meter_id,day,source,v_min,v_mean,v_max,sample_count\n";
    for (const auto& s : stats) {
        out += fmt::format("{},{},{},{},{},{},{}\n", csv::escape(s.meter_id), format_date(s.day), to_string(s.source),
                           csv::format_double(s.v_min), csv::format_double(s.v_mean), csv::format_double(s.v_max),
                           s.sample_count);
    }
    return out;
}

std::vector<DailyVoltageStats> parse_daily_stats_csv(std::string_view content) {
    const auto rows = csv::lines(content);
    if (rows.empty() || rows.front() != "meter_id,day,source,v_min,v_mean,v_max,sample_count") {
        throw ParseError("daily stats CSV: malformed header");
    }
    std::vector<DailyVoltageStats> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].empty()) {
            continue;
        }
        const auto f = csv::split(rows[i]);
        auto day = f.size() == 7 ? parse_date(f[1]) : std::nullopt;
        auto vmin = f.size() == 7 ? csv::parse_double(f[3]) : std::nullopt;
        auto vmean = f.size() == 7 ? csv::parse_double(f[4]) : std::nullopt;
        auto vmax = f.size() == 7 ? csv::parse_double(f[5]) : std::nullopt;
        if (!day || !vmin || !vmean || !vmax || (f[2] != "simulated" && f[2] != "measured")) {
            throw ParseError(fmt::format("daily stats CSV: malformed line {}", i + 1));
        }
        out.push_back(DailyVoltageStats{f[0], *day, *vmin, *vmean, *vmax, std::stoi(f[6]),
                                        f[2] == "simulated" ? Source::simulated : Source::measured});
    }
    return out;
}

}  // namespace ntl::deviation
