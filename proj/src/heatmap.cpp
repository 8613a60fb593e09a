#include "ntl/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ntl/error.hpp"

namespace ntl::heatmap {

namespace {

using json = nlohmann::json;

std::array<int, 3> parse_hex(const std::string& color) {
    if (color.size() != 7 || color[0] != '#') {
        throw Error("bad colour '" + color + "'");
    }
    std::array<int, 3> rgb{};
    for (int i = 0; i < 3; ++i) {
        rgb[static_cast<std::size_t>(i)] = std::stoi(color.substr(1 + 2 * static_cast<std::size_t>(i), 2), nullptr, 16);
    }
    return rgb;
}

std::string escape_xml(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

double ColorScale::position(double value) const {
    return std::clamp(value, -clamp, clamp) / clamp;
}

std::string ColorScale::color(std::optional<double> value) const {
    if (!value) {
        return missing;
    }
    const double t = position(*value);
    const auto from = parse_hex(zero);
    const auto to = parse_hex(t < 0.0 ? negative : positive);
    const double w = std::abs(t);
    std::array<int, 3> rgb{};
    for (std::size_t i = 0; i < 3; ++i) {
        rgb[i] = static_cast<int>(std::lround(from[i] + w * (to[i] - from[i])));
    }
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

HeatmapDocument export_heatmap(const deviation::IndicatorMatrix& matrix, const ranking::TerminalMap& terminals,
                               deviation::Indicator indicator, std::optional<std::size_t> top_k,
                               std::span<const ranking::ExclusionWindow> exclusions,
                               const ranking::PatternParams& pattern, const ColorScale& scale) {
    HeatmapDocument doc;
    doc.indicator = indicator;
    doc.scale = scale;
    doc.top_k = top_k;
    doc.exclusions.assign(exclusions.begin(), exclusions.end());
    doc.days = matrix.days();

    std::vector<std::size_t> rows;
    if (top_k) {
        for (const auto& r : ranking::build_candidates(matrix, terminals, exclusions, *top_k, pattern)) {
            rows.push_back(*matrix.meter_index(r.meter_id));
        }
    } else {
        for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
            rows.push_back(m);
        }
    }
    for (auto m : rows) {
        doc.meters.push_back(matrix.meters()[m]);
        const auto row = matrix.row(indicator, m);
        std::vector<std::optional<double>> cells(row.begin(), row.end());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (ranking::excluded(doc.days[j], exclusions)) {
                cells[j].reset();
            }
        }
        doc.cells.push_back(std::move(cells));
    }
    return doc;
}

HeatmapDocument export_heatmap(const store::AnalysisStore& store, deviation::Indicator indicator,
                               std::optional<std::size_t> top_k, const ColorScale& scale) {
    return export_heatmap(store.matrix, store.terminals, indicator, top_k, store.exclusions, store.pattern, scale);
}

std::string to_json(const HeatmapDocument& doc) {
    json days = json::array();
    for (auto d : doc.days) {
        days.push_back(format_date(d));
    }
    json values = json::array();
    for (const auto& row : doc.cells) {
        json r = json::array();
        for (const auto& v : row) {
            r.push_back(v ? json(*v) : json(nullptr));
        }
        values.push_back(std::move(r));
    }
    json exclusions = json::array();
    for (const auto& w : doc.exclusions) {
        exclusions.push_back({{"start", format_date(w.start)}, {"end", format_date(w.end)}});
    }
    json out{
        {"indicator", deviation::to_string(doc.indicator)},
        {"meters", doc.meters},
        {"days", std::move(days)},
        {"values", std::move(values)},
        {"scale",
         {{"type", "diverging"},
          {"clamp", doc.scale.clamp},
          {"negative", doc.scale.negative},
          {"zero", doc.scale.zero},
          {"positive", doc.scale.positive},
          {"missing", doc.scale.missing}}},
        {"top_k", doc.top_k ? json(*doc.top_k) : json(nullptr)},
        {"exclusions", std::move(exclusions)},
    };
    return out.dump();
}

std::string render_svg(const HeatmapDocument& doc) {
    constexpr int kCellW = 6;
    constexpr int kCellH = 14;
    constexpr int kLabelW = 110;
    constexpr int kHeaderH = 24;
    const int width = kLabelW + kCellW * static_cast<int>(doc.days.size()) + 10;
    const int height = kHeaderH + kCellH * static_cast<int>(doc.meters.size()) + 10;

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
        "font-size=\"10\">\n",
        width, height);
    out += fmt::format("<text x=\"{}\" y=\"14\">{} (clamp ±{} p.u.)</text>\n", kLabelW,
                       deviation::to_string(doc.indicator), doc.scale.clamp);
    for (std::size_t r = 0; r < doc.meters.size(); ++r) {
        const int y = kHeaderH + kCellH * static_cast<int>(r);
        out += fmt::format("<text x=\"2\" y=\"{}\">{}</text>\n", y + kCellH - 3, escape_xml(doc.meters[r]));
        for (std::size_t j = 0; j < doc.days.size(); ++j) {
            const auto& v = doc.cells[r][j];
            const auto title = v ? fmt::format("{} {} {:.4f}", doc.meters[r], format_date(doc.days[j]), *v)
                                 : fmt::format("{} {} no data", doc.meters[r], format_date(doc.days[j]));
            out += fmt::format(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}</title></rect>\n",
                kLabelW + kCellW * static_cast<int>(j), y, kCellW, kCellH, doc.scale.color(v), escape_xml(title));
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace ntl::heatmap
