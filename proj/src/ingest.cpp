#include "ntl/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "ntl/csv.hpp"
#include "ntl/error.hpp"

namespace ntl::ingest {

namespace {

using namespace std::chrono;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

std::string_view strip_bom(std::string_view s) {
    if (s.substr(0, 3) == "\xEF\xBB\xBF") {
        s.remove_prefix(3);
    }
    return s;
}

// Returns the number of columns declared by the header.
std::size_t check_header(std::string_view header, std::string_view base, std::string_view extended,
                         std::string_view what) {
    header = trim(strip_bom(header));
    if (header == base) {
        return 3;
    }
    if (header == extended) {
        return 4;
    }
    throw ParseError(fmt::format("{} CSV: malformed header '{}', expected '{}' or '{}'", what, header, base,
                                 extended));
}

template <class Row, class Fn>
ParseResult<Row> parse_rows(std::string_view content, std::string_view base, std::string_view extended,
                            std::string_view what, Fn&& parse_row) {
    const auto all = csv::lines(content);
    if (all.empty()) {
        throw ParseError(fmt::format("{} CSV: missing header", what));
    }
    const auto columns = check_header(all.front(), base, extended, what);
    ParseResult<Row> result;
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (trim(all[i]).empty()) {
            continue;
        }
        auto fields = csv::split(all[i]);
        if (fields.size() != columns && !(columns == 4 && fields.size() == 3)) {
            result.errors.push_back({i + 1, fmt::format("expected {} fields, got {}", columns, fields.size())});
            continue;
        }
        for (auto& f : fields) {
            f = std::string{trim(f)};
        }
        std::string error;
        if (auto row = parse_row(fields, error)) {
            result.rows.push_back(std::move(*row));
        } else {
            result.errors.push_back({i + 1, std::move(error)});
        }
    }
    return result;
}

void detect_gaps(const std::string& meter, Stream stream, const std::set<Date>& present, int min_days,
                 std::vector<Gap>& out) {
    std::optional<Date> prev;
    for (const auto d : present) {
        if (prev && (d - *prev).count() - 1 >= min_days) {
            out.push_back(Gap{meter, stream, *prev + days{1}, d});
        }
        prev = d;
    }
}

}  // namespace

ParseResult<EnergyReading> parse_energy_csv(std::string_view content) {
    return parse_rows<EnergyReading>(
        content, kEnergyHeader, kEnergyHeaderReactive, "energy",
        [](const std::vector<std::string>& f, std::string& error) -> std::optional<EnergyReading> {
            if (f[0].empty()) {
                error = "empty meter_id";
                return std::nullopt;
            }
            auto ts = parse_rfc3339(f[1]);
            if (!ts) {
                error = "invalid timestamp '" + f[1] + "'";
                return std::nullopt;
            }
            auto kwh = csv::parse_double(f[2]);
            if (!kwh) {
                error = "invalid energy '" + f[2] + "'";
                return std::nullopt;
            }
            if (*kwh < 0.0) {
                error = "negative energy";
                return std::nullopt;
            }
            EnergyReading row{f[0], *ts, *kwh, std::nullopt};
            if (f.size() == 4 && !f[3].empty()) {
                auto kvarh = csv::parse_double(f[3]);
                if (!kvarh) {
                    error = "invalid reactive energy '" + f[3] + "'";
                    return std::nullopt;
                }
                row.reactive_kvarh = *kvarh;
            }
            return row;
        });
}

ParseResult<VoltageReading> parse_voltage_csv(std::string_view content) {
    return parse_rows<VoltageReading>(
        content, kVoltageHeader, kVoltageHeaderPhase, "voltage",
        [](const std::vector<std::string>& f, std::string& error) -> std::optional<VoltageReading> {
            if (f[0].empty()) {
                error = "empty meter_id";
                return std::nullopt;
            }
            auto ts = parse_rfc3339(f[1]);
            if (!ts) {
                error = "invalid timestamp '" + f[1] + "'";
                return std::nullopt;
            }
            auto volts = csv::parse_double(f[2]);
            if (!volts) {
                error = "invalid voltage '" + f[2] + "'";
                return std::nullopt;
            }
            if (!(*volts > 0.0)) {
                error = "non-physical voltage";
                return std::nullopt;
            }
            VoltageReading row{f[0], *ts, *volts, std::nullopt};
            if (f.size() == 4 && !f[3].empty()) {
                auto phase = grid::parse_phase(f[3]);
                if (!phase) {
                    error = "invalid phase '" + f[3] + "'";
                    return std::nullopt;
                }
                row.phase = *phase;
            }
            return row;
        });
}

std::string write_energy_csv(std::span<const EnergyReading> rows) {
    const bool reactive = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.reactive_kvarh; });
    std::string out{reactive ? kEnergyHeaderReactive : kEnergyHeader};
    out += '\n';
    for (const auto& r : rows) {
        out += csv::escape(r.meter_id);
        out += ',';
        out += format_rfc3339(r.hour_start);
        out += ',';
        out += csv::format_double(r.energy_kwh);
        if (reactive) {
            out += ',';
            if (r.reactive_kvarh) {
                out += csv::format_double(*r.reactive_kvarh);
            }
        }
        out += '\n';
    }
    return out;
}

std::string write_voltage_csv(std::span<const VoltageReading> rows) {
    const bool phased = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.phase; });
    std::string out{phased ? kVoltageHeaderPhase : kVoltageHeader};
    out += '\n';
    for (const auto& r : rows) {
        out += csv::escape(r.meter_id);
        out += ',';
        out += format_rfc3339(r.timestamp);
        out += ',';
        out += csv::format_double(r.voltage_v);
        if (phased) {
            out += ',';
            if (r.phase) {
                out += grid::to_char(*r.phase);
            }
        }
        out += '\n';
    }
    return out;
}

void CleaningReport::merge(const CleaningReport& other) {
    energy_input += other.energy_input;
    voltage_input += other.voltage_input;
    retained += other.retained;
    duplicates += other.duplicates;
    out_of_range += other.out_of_range;
    misaligned += other.misaligned;
    gaps.insert(gaps.end(), other.gaps.begin(), other.gaps.end());
}

double CleaningRules::nominal_for(const std::string& meter_id) const {
    auto it = nominal_by_meter.find(meter_id);
    return it == nominal_by_meter.end() ? nominal_voltage : it->second;
}

CleaningRules rules_for(const grid::Network& network) {
    CleaningRules rules;
    for (std::size_t m = 0; m < network.meters().size(); ++m) {
        rules.nominal_by_meter[network.meters()[m].id] = network.buses()[network.meter_bus(m)].v_nominal;
    }
    return rules;
}

CleanResult clean(std::span<const EnergyReading> energy, std::span<const VoltageReading> voltage,
                  const CleaningRules& rules) {
    CleanResult result;
    auto& report = result.report;
    report.energy_input = energy.size();
    report.voltage_input = voltage.size();

    std::map<std::string, std::vector<EnergyReading>> energy_by_meter;
    for (const auto& r : energy) {
        if (r.hour_start.time_since_epoch().count() % 3600 != 0) {
            ++report.misaligned;
            continue;
        }
        energy_by_meter[r.meter_id].push_back(r);
    }
    std::map<std::string, std::vector<VoltageReading>> voltage_by_meter;
    for (const auto& r : voltage) {
        const double pu = r.voltage_v / rules.nominal_for(r.meter_id);
        if (!(pu >= rules.v_low_pu && pu <= rules.v_high_pu)) {
            ++report.out_of_range;
            continue;
        }
        voltage_by_meter[r.meter_id].push_back(r);
    }

    auto dedupe = [&report](auto& rows, auto key) {
        std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
        auto last = std::unique(rows.begin(), rows.end(),
                                [&](const auto& a, const auto& b) { return key(a) == key(b); });
        report.duplicates += static_cast<std::size_t>(std::distance(last, rows.end()));
        rows.erase(last, rows.end());
    };

    for (auto& [meter, rows] : energy_by_meter) {
        dedupe(rows, [](const EnergyReading& r) { return r.hour_start; });
        auto& s = result.series[meter];
        s.meter_id = meter;
        s.energy = std::move(rows);
    }
    for (auto& [meter, rows] : voltage_by_meter) {
        dedupe(rows, [](const VoltageReading& r) { return r.timestamp; });
        auto& s = result.series[meter];
        s.meter_id = meter;
        s.voltage = std::move(rows);
    }

    for (auto& [meter, s] : result.series) {
        report.retained += s.energy.size() + s.voltage.size();

        std::set<Date> energy_days;
        for (const auto& r : s.energy) {
            energy_days.insert(rules.clock.day_of(r.hour_start));
        }
        std::map<Date, int> voltage_days;
        for (const auto& r : s.voltage) {
            ++voltage_days[rules.clock.day_of(r.timestamp)];
        }
        if (!energy_days.empty()) {
            const auto span = (*energy_days.rbegin() - *energy_days.begin()).count() + 1;
            s.coverage.energy_hours = static_cast<double>(s.energy.size()) / (24.0 * static_cast<double>(span));
        }
        if (!voltage_days.empty()) {
            const auto span = (voltage_days.rbegin()->first - voltage_days.begin()->first).count() + 1;
            const auto full = std::count_if(voltage_days.begin(), voltage_days.end(),
                                            [&](const auto& kv) { return kv.second >= rules.min_samples; });
            s.coverage.voltage_days = static_cast<double>(full) / static_cast<double>(span);
        }
        detect_gaps(meter, Stream::energy, energy_days, rules.gap_min_days, report.gaps);
        std::set<Date> vdays;
        for (const auto& [d, _] : voltage_days) {
            vdays.insert(d);
        }
        detect_gaps(meter, Stream::voltage, vdays, rules.gap_min_days, report.gaps);
    }
    return result;
}

std::pair<std::vector<EnergyReading>, std::vector<VoltageReading>> flatten(
    const std::map<std::string, MeterSeries>& series) {
    std::pair<std::vector<EnergyReading>, std::vector<VoltageReading>> out;
    for (const auto& [_, s] : series) {
        out.first.insert(out.first.end(), s.energy.begin(), s.energy.end());
        out.second.insert(out.second.end(), s.voltage.begin(), s.voltage.end());
    }
    return out;
}

std::map<Timestamp, powerflow::PowerKw> hourly_power(const MeterSeries& series, double power_factor) {
    if (!(power_factor > 0.0 && power_factor <= 1.0)) {
        throw Error("power factor must be in (0, 1]");
    }
    const double tan_phi = std::tan(std::acos(power_factor));
    std::map<Timestamp, powerflow::PowerKw> out;
    for (const auto& r : series.energy) {
        // Energy over exactly one hour equals mean power in kW.
        const double p = r.energy_kwh;
        const double q = r.reactive_kvarh ? *r.reactive_kvarh : p * tan_phi;
        out.emplace(r.hour_start, powerflow::PowerKw{p, q});
    }
    return out;
}

}  // namespace ntl::ingest
