#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntl/deviation.hpp"
#include "ntl/ranking.hpp"
#include "ntl/store.hpp"

namespace ntl::heatmap {

/// Diverging scale symmetric about zero: negative values towards green,
/// positive towards red, missing cells grey.
struct ColorScale {
    double clamp = 0.15;  // p.u.
    std::string negative = "#1a9850";
    std::string zero = "#ffffff";
    std::string positive = "#d73027";
    std::string missing = "#bdbdbd";

    /// Value clamped to [-clamp, clamp] and divided by clamp.
    double position(double value) const;
    std::string color(std::optional<double> value) const;
};

struct HeatmapDocument {
    deviation::Indicator indicator = deviation::Indicator::dv_min;
    std::vector<std::string> meters;
    std::vector<Date> days;
    std::vector<std::vector<std::optional<double>>> cells;  // [row][day], raw values
    ColorScale scale;
    std::optional<std::size_t> top_k;
    std::vector<ranking::ExclusionWindow> exclusions;
};

/// All meters in matrix order when top_k is absent, otherwise the top_k
/// ranked meters in rank order. Cells inside an exclusion are blanked.
HeatmapDocument export_heatmap(const deviation::IndicatorMatrix& matrix, const ranking::TerminalMap& terminals,
                               deviation::Indicator indicator, std::optional<std::size_t> top_k,
                               std::span<const ranking::ExclusionWindow> exclusions,
                               const ranking::PatternParams& pattern = {}, const ColorScale& scale = {});
/// Uses the store's own exclusion windows and pattern parameters.
HeatmapDocument export_heatmap(const store::AnalysisStore& store, deviation::Indicator indicator,
                               std::optional<std::size_t> top_k, const ColorScale& scale = {});

std::string to_json(const HeatmapDocument& doc);
std::string render_svg(const HeatmapDocument& doc);

}  // namespace ntl::heatmap
