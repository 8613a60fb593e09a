#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/deviation.hpp"
#include "ntl/grid.hpp"
#include "ntl/time.hpp"

namespace ntl::ranking {

/// Half-open day range [start, end) removed from scoring.
struct ExclusionWindow {
    Date start{};
    Date end{};

    bool contains(Date d) const { return d >= start && d < end; }
    friend bool operator==(const ExclusionWindow&, const ExclusionWindow&) = default;
};

/// Parses "YYYY-MM-DD..YYYY-MM-DD"; nullopt on bad syntax or start >= end.
std::optional<ExclusionWindow> parse_exclusion(std::string_view text);
std::string to_string(const ExclusionWindow& window);
bool excluded(Date d, std::span<const ExclusionWindow> windows);

struct Severity {
    double dv_min_mean = 0.0;
    double dv_min_max = 0.0;
    std::size_t present_days = 0;

    friend bool operator==(const Severity&, const Severity&) = default;
};

/// Per meter over ΔV_min cells outside every exclusion: signed maximum and
/// arithmetic mean. Meters without included cells are absent.
std::map<std::string, Severity> severity_scores(const deviation::IndicatorMatrix& matrix,
                                                std::span<const ExclusionWindow> exclusions);

enum class Triage { unreviewed, field_inspection_candidate, validation_candidate, discarded };

std::string_view to_string(Triage triage);
std::optional<Triage> parse_triage(std::string_view text);

enum class PatternKind { persistent, ceased, onset, intermittent, quiet };

std::string_view to_string(PatternKind kind);

struct Pattern {
    PatternKind kind = PatternKind::quiet;
    std::optional<Date> date;  // last hot day for ceased, first hot day for onset

    /// "quiet", "ceased:2021-06-03", ...
    std::string to_string() const;
    friend bool operator==(const Pattern&, const Pattern&) = default;
};

struct PatternParams {
    double threshold = 0.1;  // p.u.; a day is hot iff ΔV_min > threshold
    double p_hi = 0.5;
    int tail_days = 21;
    int min_hot = 5;

    friend bool operator==(const PatternParams&, const PatternParams&) = default;
};

/// Rule-based label of a daily ΔV_min series. `days` and `values` are
/// parallel and ascending; gaps in `days` are allowed and missing values
/// are never hot. Rules are tried in order quiet, persistent, ceased,
/// onset, intermittent.
Pattern pattern_classify(std::span<const Date> days, std::span<const std::optional<double>> values,
                         const PatternParams& params = {});

struct CandidateRecord {
    int rank = 0;
    std::string meter_id;
    std::string terminal_id;
    double dv_min_mean = 0.0;
    double dv_min_max = 0.0;
    std::size_t present_days = 0;
    Pattern pattern;
    Triage triage = Triage::unreviewed;
    std::string comment;

    friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

using TerminalMap = std::map<std::string, std::string>;  // meter id -> bus id

TerminalMap terminals_of(const grid::Network& network);

/// Top `top_k` meters by dv_min_max descending, ties by dv_min_mean
/// descending then meter id ascending. Patterns are left quiet.
std::vector<CandidateRecord> rank_candidates(const std::map<std::string, Severity>& scores,
                                             const TerminalMap& terminals, std::size_t top_k);
std::vector<CandidateRecord> rank_candidates(const std::map<std::string, Severity>& scores,
                                             const grid::Network& network, std::size_t top_k);

/// Scores, ranks and labels patterns over the included days.
std::vector<CandidateRecord> build_candidates(const deviation::IndicatorMatrix& matrix, const TerminalMap& terminals,
                                              std::span<const ExclusionWindow> exclusions, std::size_t top_k,
                                              const PatternParams& params = {});

/// Pattern of one meter row over the included days of the matrix.
Pattern meter_pattern(const deviation::IndicatorMatrix& matrix, std::size_t meter,
                      std::span<const ExclusionWindow> exclusions, const PatternParams& params = {});

inline constexpr std::string_view kCandidateHeader =
    "rank,meter_id,terminal_id,dv_min_mean,dv_min_max,pattern,triage,comment";

/// Candidate list CSV with indicators at four decimals.
std::string export_candidates(std::span<const CandidateRecord> records);

}  // namespace ntl::ranking
