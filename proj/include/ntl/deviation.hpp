#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/grid.hpp"
#include "ntl/ingest.hpp"
#include "ntl/powerflow.hpp"
#include "ntl/time.hpp"

namespace ntl::deviation {

enum class Source { simulated, measured };

enum class Indicator { dv_mean = 0, dv_min = 1, dv_max = 2 };

inline constexpr std::array<Indicator, 3> kIndicators = {Indicator::dv_mean, Indicator::dv_min,
                                                         Indicator::dv_max};

std::string_view to_string(Indicator indicator);
std::optional<Indicator> parse_indicator(std::string_view text);
std::string_view to_string(Source source);

struct DailyVoltageStats {
    std::string meter_id;
    Date day{};
    double v_min = 0.0;
    double v_mean = 0.0;
    double v_max = 0.0;
    int sample_count = 0;
    Source source = Source::simulated;

    friend bool operator==(const DailyVoltageStats&, const DailyVoltageStats&) = default;
};

/// Per meter and local day, min/mean/max of meter_voltage over converged
/// hourly solutions. Output sorted by (meter order in the network, day).
std::vector<DailyVoltageStats> daily_stats_simulated(std::span<const powerflow::VoltageSolution> solutions,
                                                     const grid::Network& network, const DayClock& clock = {});

/// Per meter and local day, min/mean/max of instantaneous samples in p.u. of
/// the meter bus nominal voltage. Days with fewer than `min_samples`
/// samples are omitted. Meters unknown to the network are ignored.
std::vector<DailyVoltageStats> daily_stats_measured(const std::map<std::string, ingest::MeterSeries>& series,
                                                    const grid::Network& network, int min_samples = 4,
                                                    const DayClock& clock = {});

/// Dense meter x day grid of the three indicators with explicit missing cells.
class IndicatorMatrix {
  public:
    IndicatorMatrix() = default;
    IndicatorMatrix(std::vector<std::string> meters, Date first_day, std::size_t day_count);

    const std::vector<std::string>& meters() const { return meters_; }
    std::size_t meter_count() const { return meters_.size(); }
    std::size_t day_count() const { return day_count_; }
    Date first_day() const { return first_day_; }
    Date day(std::size_t index) const { return first_day_ + std::chrono::days{static_cast<int>(index)}; }
    std::vector<Date> days() const;
    std::optional<std::size_t> meter_index(std::string_view meter_id) const;
    std::optional<std::size_t> day_index(Date d) const;

    std::optional<double> at(Indicator indicator, std::size_t meter, std::size_t day) const {
        return layers_[static_cast<std::size_t>(indicator)][meter * day_count_ + day];
    }
    void set(Indicator indicator, std::size_t meter, std::size_t day, std::optional<double> value) {
        layers_[static_cast<std::size_t>(indicator)][meter * day_count_ + day] = value;
    }
    /// One meter's row of a layer.
    std::span<const std::optional<double>> row(Indicator indicator, std::size_t meter) const;
    std::size_t present_count(Indicator indicator) const;

    friend bool operator==(const IndicatorMatrix&, const IndicatorMatrix&) = default;

  private:
    std::vector<std::string> meters_;
    Date first_day_{};
    std::size_t day_count_ = 0;
    std::array<std::vector<std::optional<double>>, 3> layers_;
};

/// dv_x = v_x,sim - v_x,meas for meter-days present on both sides. Rows
/// follow `meters`; the day axis spans the union of days contiguously.
IndicatorMatrix compute_indicators(std::span<const DailyVoltageStats> simulated,
                                   std::span<const DailyVoltageStats> measured, std::vector<std::string> meters);

struct IndicatorSummary {
    double average = 0.0;
    double std_dev = 0.0;  // population
    std::size_t count = 0;

    friend bool operator==(const IndicatorSummary&, const IndicatorSummary&) = default;
};

struct SummaryStats {
    std::array<IndicatorSummary, 3> by_indicator;

    const IndicatorSummary& operator[](Indicator indicator) const {
        return by_indicator[static_cast<std::size_t>(indicator)];
    }
    friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

SummaryStats summary_statistics(const IndicatorMatrix& matrix);

struct Histogram {
    Indicator indicator = Indicator::dv_min;
    double bin_width = 0.005;
    std::vector<double> edges;        // edges[i] = (lowest + i) * bin_width
    std::vector<std::size_t> counts;  // counts[i] covers [edges[i], edges[i+1])

    std::size_t total() const;
};

inline constexpr double kDefaultBinWidth = 0.005;

/// Bins symmetric about zero; a value on an edge falls into the upper bin.
Histogram histogram(const IndicatorMatrix& matrix, Indicator indicator, double bin_width = kDefaultBinWidth);

/// Fraction of present cells of a layer with |value| <= bound.
double mass_within(const IndicatorMatrix& matrix, Indicator indicator, double bound);

/// One layer as CSV: header "meter_id,<ISO dates...>", empty cell = missing.
std::string to_csv(const IndicatorMatrix& matrix, Indicator indicator);
/// Rebuilds a matrix from its three layer CSVs; throws ParseError when
/// axes disagree or a cell is malformed.
IndicatorMatrix from_csv(std::string_view dv_mean_csv, std::string_view dv_min_csv, std::string_view dv_max_csv);

std::string write_daily_stats_csv(std::span<const DailyVoltageStats> stats);
std::vector<DailyVoltageStats> parse_daily_stats_csv(std::string_view content);

}  // namespace ntl::deviation
