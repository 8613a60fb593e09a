#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/deviation.hpp"
#include "ntl/ingest.hpp"
#include "ntl/ranking.hpp"
#include "ntl/time.hpp"

namespace ntl::store {

struct Annotation {
    ranking::Triage triage = ranking::Triage::unreviewed;
    std::string comment;
    Timestamp updated_at{};
    std::uint64_t version = 0;  // bumped on every accepted write

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Provenance {
    std::map<std::string, std::string> input_paths;    // "network" / "energy" / "voltage"
    std::map<std::string, std::string> input_digests;  // SHA-256, lowercase hex
    std::string config;
    Timestamp created_at{};
    Timestamp loadflow_completed_at{};
    Timestamp ranking_updated_at{};
    std::uint64_t loadflow_runs = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Everything one analysis run produced plus the expert's annotations.
struct AnalysisStore {
    std::string run_id;
    ranking::TerminalMap terminals;
    deviation::IndicatorMatrix matrix;
    deviation::SummaryStats summary;
    std::vector<deviation::DailyVoltageStats> daily_stats;  // both sources
    ingest::CleaningReport cleaning;
    std::size_t snapshots = 0;
    std::size_t converged = 0;
    std::size_t top_k = 15;
    ranking::PatternParams pattern;
    std::vector<ranking::ExclusionWindow> exclusions;
    std::uint64_t exclusions_version = 0;
    std::map<std::string, Annotation> annotations;
    Provenance provenance;
    std::vector<ranking::CandidateRecord> ranking;  // every scored meter, without annotations

    /// Rebuilds `ranking` from the matrix and exclusions.
    void recompute_ranking();
    /// The first `limit` ranked meters (top_k when absent) with triage and
    /// comment taken from the annotations.
    std::vector<ranking::CandidateRecord> candidates(std::optional<std::size_t> limit = std::nullopt) const;
    bool is_ranked(std::string_view meter_id) const;

    friend bool operator==(const AnalysisStore&, const AnalysisStore&) = default;
};

std::string sha256_hex(std::string_view data);

/// Current time truncated to whole seconds, as persisted.
Timestamp now();

/// Writes a complete store directory; the directory appears atomically.
void save(const AnalysisStore& store, const std::filesystem::path& dir);
/// Throws ParseError for malformed or incomplete directories.
AnalysisStore load(const std::filesystem::path& dir);

/// Rewrites only the annotation document, or only the exclusion windows
/// and ranking-dependent files, each through a temporary file and rename.
void save_annotations(const AnalysisStore& store, const std::filesystem::path& dir);
void save_exclusions(const AnalysisStore& store, const std::filesystem::path& dir);

/// Run ids of the store directories below `root`, sorted.
std::vector<std::string> list_runs(const std::filesystem::path& root);

/// Writes `content` to `path` through a sibling temporary file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace ntl::store
