#include "ntl/ranking.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "ntl/csv.hpp"

namespace ntl::ranking {

std::optional<ExclusionWindow> parse_exclusion(std::string_view text) {
    const auto sep = text.find("..");
    if (sep == std::string_view::npos) {
        return std::nullopt;
    }
    auto start = parse_date(text.substr(0, sep));
    auto end = parse_date(text.substr(sep + 2));
    if (!start || !end || !(*start < *end)) {
        return std::nullopt;
    }
    return ExclusionWindow{*start, *end};
}

std::string to_string(const ExclusionWindow& window) {
    return format_date(window.start) + ".." + format_date(window.end);
}

bool excluded(Date d, std::span<const ExclusionWindow> windows) {
    return std::any_of(windows.begin(), windows.end(), [d](const auto& w) { return w.contains(d); });
}

std::map<std::string, Severity> severity_scores(const deviation::IndicatorMatrix& matrix,
                                                std::span<const ExclusionWindow> exclusions) {
    std::vector<bool> included(matrix.day_count());
    for (std::size_t j = 0; j < matrix.day_count(); ++j) {
        included[j] = !excluded(matrix.day(j), exclusions);
    }
    std::map<std::string, Severity> scores;
    for (std::size_t m = 0; m < matrix.meter_count(); ++m) {
        const auto row = matrix.row(deviation::Indicator::dv_min, m);
        double max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (included[j] && row[j]) {
                max = std::max(max, *row[j]);
                sum += *row[j];
                ++n;
            }
        }
        if (n > 0) {
            scores[matrix.meters()[m]] = Severity{sum / static_cast<double>(n), max, n};
        }
    }
    return scores;
}

std::string_view to_string(Triage triage) {
    switch (triage) {
        case Triage::unreviewed: return "unreviewed";
        case Triage::field_inspection_candidate: return "field_inspection_candidate";
        case Triage::validation_candidate: return "validation_candidate";
        case Triage::discarded: return "discarded";
    }
    return "?";
}

std::optional<Triage> parse_triage(std::string_view text) {
    for (auto t : {Triage::unreviewed, Triage::field_inspection_candidate, Triage::validation_candidate,
                   Triage::discarded}) {
        if (to_string(t) == text) {
            return t;
        }
    }
    return std::nullopt;
}

std::string_view to_string(PatternKind kind) {
    switch (kind) {
        case PatternKind::persistent: return "persistent";
        case PatternKind::ceased: return "ceased";
        case PatternKind::onset: return "onset";
        case PatternKind::intermittent: return "intermittent";
        case PatternKind::quiet: return "quiet";
    }
    return "?";
}

std::string Pattern::to_string() const {
    std::string out{ranking::to_string(kind)};
    if (date) {
        out += ':' + format_date(*date);
    }
    return out;
}

Pattern pattern_classify(std::span<const Date> days, std::span<const std::optional<double>> values,
                         const PatternParams& params) {
    const auto n = std::min(days.size(), values.size());
    std::optional<std::size_t> first_hot, last_hot;
    std::size_t hot_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i] && *values[i] > params.threshold) {
            first_hot = first_hot.value_or(i);
            last_hot = i;
            ++hot_total;
        }
    }
    if (hot_total == 0) {
        return {};
    }

    const Date front = days.front();
    const Date back = days[n - 1];
    const Date mid = front + std::chrono::days{((back - front).count() + 1) / 2};
    std::size_t hot_head = 0, present_head = 0, hot_tail = 0, present_tail = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!values[i]) {
            continue;
        }
        const bool hot = *values[i] > params.threshold;
        if (days[i] < mid) {
            ++present_head;
            hot_head += hot ? 1 : 0;
        } else {
            ++present_tail;
            hot_tail += hot ? 1 : 0;
        }
    }
    auto fraction = [](std::size_t hot, std::size_t present) {
        return present == 0 ? 0.0 : static_cast<double>(hot) / static_cast<double>(present);
    };
    if (fraction(hot_head, present_head) >= params.p_hi && fraction(hot_tail, present_tail) >= params.p_hi) {
        return {PatternKind::persistent, std::nullopt};
    }
    const bool enough = hot_total >= static_cast<std::size_t>(params.min_hot);
    const Date last = days[*last_hot];
    if (enough && (back - last).count() >= params.tail_days) {
        return {PatternKind::ceased, last};
    }
    const Date first = days[*first_hot];
    if (enough && (first - front).count() >= params.tail_days) {
        return {PatternKind::onset, first};
    }
    return {PatternKind::intermittent, std::nullopt};
}

TerminalMap terminals_of(const grid::Network& network) {
    TerminalMap out;
    for (const auto& m : network.meters()) {
        out.emplace(m.id, m.bus);
    }
    return out;
}

std::vector<CandidateRecord> rank_candidates(const std::map<std::string, Severity>& scores,
                                             const TerminalMap& terminals, std::size_t top_k) {
    std::vector<CandidateRecord> records;
    records.reserve(scores.size());
    for (const auto& [meter, s] : scores) {
        CandidateRecord r;
        r.meter_id = meter;
        auto it = terminals.find(meter);
        r.terminal_id = it == terminals.end() ? std::string{} : it->second;
        r.dv_min_mean = s.dv_min_mean;
        r.dv_min_max = s.dv_min_max;
        r.present_days = s.present_days;
        records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(), [](const CandidateRecord& a, const CandidateRecord& b) {
        if (a.dv_min_max != b.dv_min_max) {
            return a.dv_min_max > b.dv_min_max;
        }
        if (a.dv_min_mean != b.dv_min_mean) {
            return a.dv_min_mean > b.dv_min_mean;
        }
        return a.meter_id < b.meter_id;
    });
    if (records.size() > top_k) {
        records.resize(top_k);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].rank = static_cast<int>(i + 1);
    }
    return records;
}

std::vector<CandidateRecord> rank_candidates(const std::map<std::string, Severity>& scores,
                                             const grid::Network& network, std::size_t top_k) {
    return rank_candidates(scores, terminals_of(network), top_k);
}

Pattern meter_pattern(const deviation::IndicatorMatrix& matrix, std::size_t meter,
                      std::span<const ExclusionWindow> exclusions, const PatternParams& params) {
    std::vector<Date> days;
    std::vector<std::optional<double>> values;
    const auto row = matrix.row(deviation::Indicator::dv_min, meter);
    for (std::size_t j = 0; j < matrix.day_count(); ++j) {
        const auto d = matrix.day(j);
        if (!excluded(d, exclusions)) {
            days.push_back(d);
            values.push_back(row[j]);
        }
    }
    if (days.empty()) {
        return {};
    }
    return pattern_classify(days, values, params);
}

std::vector<CandidateRecord> build_candidates(const deviation::IndicatorMatrix& matrix, const TerminalMap& terminals,
                                              std::span<const ExclusionWindow> exclusions, std::size_t top_k,
                                              const PatternParams& params) {
    auto records = rank_candidates(severity_scores(matrix, exclusions), terminals, top_k);
    for (auto& r : records) {
        r.pattern = meter_pattern(matrix, *matrix.meter_index(r.meter_id), exclusions, params);
    }
    return records;
}

std::string export_candidates(std::span<const CandidateRecord> records) {
    std::string out{kCandidateHeader};
    out += '\n';
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{:.4f},{:.4f},{},{},{}\n", r.rank, csv::escape(r.meter_id),
                           csv::escape(r.terminal_id), r.dv_min_mean, r.dv_min_max, r.pattern.to_string(),
                           to_string(r.triage), csv::escape(r.comment));
    }
    return out;
}

}  // namespace ntl::ranking
