#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/grid.hpp"
#include "ntl/powerflow.hpp"
#include "ntl/time.hpp"

namespace ntl::ingest {

struct EnergyReading {
    std::string meter_id;
    Timestamp hour_start{};
    double energy_kwh = 0.0;
    std::optional<double> reactive_kvarh;

    friend bool operator==(const EnergyReading&, const EnergyReading&) = default;
};

struct VoltageReading {
    std::string meter_id;
    Timestamp timestamp{};
    double voltage_v = 0.0;
    std::optional<grid::Phase> phase;

    friend bool operator==(const VoltageReading&, const VoltageReading&) = default;
};

struct RowError {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string message;
};

template <class T>
struct ParseResult {
    std::vector<T> rows;
    std::vector<RowError> errors;
};

inline constexpr std::string_view kEnergyHeader = "meter_id,hour_start,energy_kwh";
inline constexpr std::string_view kEnergyHeaderReactive = "meter_id,hour_start,energy_kwh,reactive_kvarh";
inline constexpr std::string_view kVoltageHeader = "meter_id,timestamp,voltage_v";
inline constexpr std::string_view kVoltageHeaderPhase = "meter_id,timestamp,voltage_v,phase";

/// Throws ParseError on a header mismatch; bad rows land in `errors`.
ParseResult<EnergyReading> parse_energy_csv(std::string_view content);
ParseResult<VoltageReading> parse_voltage_csv(std::string_view content);

std::string write_energy_csv(std::span<const EnergyReading> rows);
std::string write_voltage_csv(std::span<const VoltageReading> rows);

enum class Stream { energy, voltage };

/// Run of whole local days without readings: [start, end).
struct Gap {
    std::string meter_id;
    Stream stream = Stream::voltage;
    Date start{};
    Date end{};

    friend bool operator==(const Gap&, const Gap&) = default;
};

struct CleaningReport {
    std::size_t energy_input = 0;
    std::size_t voltage_input = 0;
    std::size_t retained = 0;
    std::size_t duplicates = 0;
    std::size_t out_of_range = 0;
    std::size_t misaligned = 0;  // energy rows not on the hour
    std::vector<Gap> gaps;

    std::size_t dropped() const { return duplicates + out_of_range + misaligned; }
    void merge(const CleaningReport& other);
    friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

struct Coverage {
    double energy_hours = 0.0;  // fraction of hours in the observed day span with a reading
    double voltage_days = 0.0;  // fraction of days with >= min_samples voltage readings
};

struct MeterSeries {
    std::string meter_id;
    std::vector<EnergyReading> energy;    // strictly increasing hour_start
    std::vector<VoltageReading> voltage;  // strictly increasing timestamp
    Coverage coverage;
};

struct CleaningRules {
    double nominal_voltage = 230.0;
    std::map<std::string, double> nominal_by_meter;  // overrides nominal_voltage
    double v_low_pu = 0.7;
    double v_high_pu = 1.3;
    int gap_min_days = 2;
    int min_samples = 4;
    DayClock clock;

    double nominal_for(const std::string& meter_id) const;
};

/// Nominal voltages taken from each meter's bus.
CleaningRules rules_for(const grid::Network& network);

struct CleanResult {
    std::map<std::string, MeterSeries> series;
    CleaningReport report;
};

/// Keep-first de-duplication on (meter, timestamp), plausibility window on
/// voltages, hour alignment on energy rows, and day-gap detection.
CleanResult clean(std::span<const EnergyReading> energy, std::span<const VoltageReading> voltage,
                  const CleaningRules& rules = {});

/// Concatenates cleaned series back into flat reading lists.
std::pair<std::vector<EnergyReading>, std::vector<VoltageReading>> flatten(
    const std::map<std::string, MeterSeries>& series);

/// P = kWh over one hour; Q from reactive energy when present, else from
/// the power factor.
std::map<Timestamp, powerflow::PowerKw> hourly_power(const MeterSeries& series, double power_factor = 0.95);

}  // namespace ntl::ingest
