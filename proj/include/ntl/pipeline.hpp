#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntl/deviation.hpp"
#include "ntl/grid.hpp"
#include "ntl/ingest.hpp"
#include "ntl/powerflow.hpp"
#include "ntl/ranking.hpp"
#include "ntl/time.hpp"

namespace ntl::pipeline {

struct AnalysisOptions {
    DayClock clock;
    int min_samples = 4;
    int gap_min_days = 2;
    double power_factor = 0.95;
    grid::PerUnitBases bases;
    powerflow::SolverConfig solver;
    std::vector<ranking::ExclusionWindow> exclusions;
    ranking::PatternParams pattern;
    unsigned threads = 0;
};

struct Analysis {
    std::size_t malformed_rows = 0;
    ingest::CleaningReport cleaning;
    std::size_t snapshots = 0;
    std::size_t converged = 0;
    std::vector<deviation::DailyVoltageStats> simulated;
    std::vector<deviation::DailyVoltageStats> measured;
    deviation::IndicatorMatrix matrix;
    deviation::SummaryStats summary;
    std::vector<ranking::CandidateRecord> ranking;  // every scored meter, rank order
};

/// Hourly load snapshots over every hour with at least one energy reading;
/// meters without a reading in an hour are listed as missing.
std::vector<powerflow::LoadSnapshot> hourly_snapshots(const std::map<std::string, ingest::MeterSeries>& series,
                                                      double power_factor);

/// In-memory run of ingest, load flow, daily statistics, indicators,
/// summary and ranking. Failures are rethrown as StageError naming the
/// stage: "ingest", "loadflow", "daily_stats", "indicators", "ranking".
Analysis analyze(const grid::Network& network, std::string_view energy_csv, std::string_view voltage_csv,
                 const AnalysisOptions& options = {});

/// Run configuration document. Relative paths resolve against the
/// directory holding the configuration file.
struct PipelineConfig {
    std::filesystem::path network;
    std::filesystem::path energy;
    std::filesystem::path voltage;
    std::filesystem::path store_root = "runs";
    std::optional<std::string> run_id;  // derived from input digests when absent
    std::size_t top_k = 15;
    AnalysisOptions analysis;
    std::string source;  // the configuration document as written, for provenance
};

/// Throws ConfigError for malformed documents or unknown keys.
PipelineConfig parse_config(std::string_view document, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& config);

struct RunResult {
    std::string run_id;
    std::filesystem::path directory;
    Analysis analysis;
};

/// Checks inputs exist (ConfigError otherwise), analyses them and persists
/// one store directory under store_root. Nothing is written on failure.
RunResult run_pipeline(const PipelineConfig& config);

}  // namespace ntl::pipeline
