#include "ntl/store.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "ntl/error.hpp"

namespace ntl::store {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr const char* kManifest = "manifest.json";
constexpr const char* kAnnotations = "annotations.json";
constexpr const char* kExclusions = "exclusions.json";
constexpr const char* kCandidates = "candidates.csv";
constexpr const char* kDailyStats = "daily_stats.csv";

std::string layer_file(deviation::Indicator indicator) {
    return std::string(deviation::to_string(indicator)) + ".csv";
}

std::string unique_suffix() {
    static std::atomic<unsigned> counter{0};
    thread_local std::mt19937_64 rng{std::random_device{}()};
    return fmt::format("{:x}-{}", rng(), counter++);
}

Timestamp parse_time(const json& j) {
    auto t = parse_rfc3339(j.get<std::string>());
    if (!t) {
        throw ParseError("bad timestamp '" + j.get<std::string>() + "'");
    }
    return *t;
}

Date parse_day(const json& j) {
    auto d = parse_date(j.get<std::string>());
    if (!d) {
        throw ParseError("bad date '" + j.get<std::string>() + "'");
    }
    return *d;
}

json summary_json(const deviation::SummaryStats& summary) {
    json out = json::object();
    for (auto ind : deviation::kIndicators) {
        const auto& s = summary[ind];
        out[std::string(deviation::to_string(ind))] = {
            {"average", s.average}, {"std_dev", s.std_dev}, {"count", s.count}};
    }
    return out;
}

json manifest_json(const AnalysisStore& store) {
    json gaps = json::array();
    for (const auto& g : store.cleaning.gaps) {
        gaps.push_back({{"meter_id", g.meter_id},
                        {"stream", g.stream == ingest::Stream::energy ? "energy" : "voltage"},
                        {"start", format_date(g.start)},
                        {"end", format_date(g.end)}});
    }
    const auto& c = store.cleaning;
    const auto& p = store.provenance;
    return {
        {"format_version", kFormatVersion},
        {"run_id", store.run_id},
        {"terminals", store.terminals},
        {"summary", summary_json(store.summary)},
        {"cleaning",
         {{"energy_input", c.energy_input},
          {"voltage_input", c.voltage_input},
          {"retained", c.retained},
          {"duplicates", c.duplicates},
          {"out_of_range", c.out_of_range},
          {"misaligned", c.misaligned},
          {"gaps", std::move(gaps)}}},
        {"snapshots", store.snapshots},
        {"converged", store.converged},
        {"top_k", store.top_k},
        {"pattern",
         {{"threshold", store.pattern.threshold},
          {"p_hi", store.pattern.p_hi},
          {"tail_days", store.pattern.tail_days},
          {"min_hot", store.pattern.min_hot}}},
        {"provenance",
         {{"input_paths", p.input_paths},
          {"input_digests", p.input_digests},
          {"config", p.config},
          {"created_at", format_rfc3339(p.created_at)},
          {"loadflow_completed_at", format_rfc3339(p.loadflow_completed_at)},
          {"ranking_updated_at", format_rfc3339(p.ranking_updated_at)},
          {"loadflow_runs", p.loadflow_runs}}},
    };
}

void read_manifest(const json& doc, AnalysisStore& store) {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
        throw ParseError("unsupported store format version");
    }
    store.run_id = doc.at("run_id").get<std::string>();
    store.terminals = doc.at("terminals").get<ranking::TerminalMap>();
    for (auto ind : deviation::kIndicators) {
        const auto& s = doc.at("summary").at(std::string(deviation::to_string(ind)));
        store.summary.by_indicator[static_cast<std::size_t>(ind)] = {
            s.at("average").get<double>(), s.at("std_dev").get<double>(), s.at("count").get<std::size_t>()};
    }
    const auto& c = doc.at("cleaning");
    store.cleaning.energy_input = c.at("energy_input").get<std::size_t>();
    store.cleaning.voltage_input = c.at("voltage_input").get<std::size_t>();
    store.cleaning.retained = c.at("retained").get<std::size_t>();
    store.cleaning.duplicates = c.at("duplicates").get<std::size_t>();
    store.cleaning.out_of_range = c.at("out_of_range").get<std::size_t>();
    store.cleaning.misaligned = c.at("misaligned").get<std::size_t>();
    for (const auto& g : c.at("gaps")) {
        store.cleaning.gaps.push_back({g.at("meter_id").get<std::string>(),
                                       g.at("stream").get<std::string>() == "energy" ? ingest::Stream::energy
                                                                                     : ingest::Stream::voltage,
                                       parse_day(g.at("start")), parse_day(g.at("end"))});
    }
    store.snapshots = doc.at("snapshots").get<std::size_t>();
    store.converged = doc.at("converged").get<std::size_t>();
    store.top_k = doc.at("top_k").get<std::size_t>();
    const auto& pat = doc.at("pattern");
    store.pattern = {pat.at("threshold").get<double>(), pat.at("p_hi").get<double>(),
                     pat.at("tail_days").get<int>(), pat.at("min_hot").get<int>()};
    const auto& p = doc.at("provenance");
    store.provenance.input_paths = p.at("input_paths").get<std::map<std::string, std::string>>();
    store.provenance.input_digests = p.at("input_digests").get<std::map<std::string, std::string>>();
    store.provenance.config = p.at("config").get<std::string>();
    store.provenance.created_at = parse_time(p.at("created_at"));
    store.provenance.loadflow_completed_at = parse_time(p.at("loadflow_completed_at"));
    store.provenance.ranking_updated_at = parse_time(p.at("ranking_updated_at"));
    store.provenance.loadflow_runs = p.at("loadflow_runs").get<std::uint64_t>();
}

std::string annotations_document(const AnalysisStore& store) {
    json doc = json::object();
    for (const auto& [meter, a] : store.annotations) {
        doc[meter] = {{"triage", ranking::to_string(a.triage)},
                      {"comment", a.comment},
                      {"updated_at", format_rfc3339(a.updated_at)},
                      {"version", a.version}};
    }
    return doc.dump(2) + "\n";
}

std::string exclusions_document(const AnalysisStore& store) {
    json windows = json::array();
    for (const auto& w : store.exclusions) {
        windows.push_back({{"start", format_date(w.start)}, {"end", format_date(w.end)}});
    }
    return json{{"version", store.exclusions_version}, {"windows", std::move(windows)}}.dump(2) + "\n";
}

void write_all(const AnalysisStore& store, const fs::path& dir) {
    auto put = [&](const std::string& name, std::string_view content) {
        std::ofstream out(dir / name, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error("cannot write " + (dir / name).string());
        }
    };
    put(kManifest, manifest_json(store).dump(2) + "\n");
    for (auto ind : deviation::kIndicators) {
        put(layer_file(ind), deviation::to_csv(store.matrix, ind));
    }
    put(kDailyStats, deviation::write_daily_stats_csv(store.daily_stats));
    put(kCandidates, ranking::export_candidates(store.candidates()));
    put(kAnnotations, annotations_document(store));
    put(kExclusions, exclusions_document(store));
}

}  // namespace

void AnalysisStore::recompute_ranking() {
    ranking = ranking::build_candidates(matrix, terminals, exclusions, std::numeric_limits<std::size_t>::max(),
                                        pattern);
}

std::vector<ranking::CandidateRecord> AnalysisStore::candidates(std::optional<std::size_t> limit) const {
    const auto n = std::min(ranking.size(), limit.value_or(top_k));
    std::vector<ranking::CandidateRecord> out(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(n));
    for (auto& r : out) {
        if (auto it = annotations.find(r.meter_id); it != annotations.end()) {
            r.triage = it->second.triage;
            r.comment = it->second.comment;
        }
    }
    return out;
}

bool AnalysisStore::is_ranked(std::string_view meter_id) const {
    return std::any_of(ranking.begin(), ranking.end(), [&](const auto& r) { return r.meter_id == meter_id; });
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += fmt::format("{:02x}", md[i]);
    }
    return out;
}

Timestamp now() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp-" + unique_suffix());
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

void save(const AnalysisStore& store, const fs::path& dir) {
    const auto parent = dir.parent_path().empty() ? fs::path(".") : dir.parent_path();
    const auto name = dir.filename().string();
    const auto tmp = parent / (".tmp-" + name + "-" + unique_suffix());
    fs::create_directories(tmp);
    try {
        write_all(store, tmp);
        if (fs::exists(dir)) {
            const auto old = parent / (".old-" + name + "-" + unique_suffix());
            fs::rename(dir, old);
            fs::rename(tmp, dir);
            fs::remove_all(old);
        } else {
            fs::rename(tmp, dir);
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

AnalysisStore load(const fs::path& dir) {
    auto need = [&](const std::string& name) {
        const auto path = dir / name;
        if (!fs::is_regular_file(path)) {
            throw ParseError(fmt::format("store {}: missing {}", dir.string(), name));
        }
        return read_file(path);
    };
    AnalysisStore store;
    try {
        read_manifest(json::parse(need(kManifest)), store);
        store.matrix = deviation::from_csv(need(layer_file(deviation::Indicator::dv_mean)),
                                           need(layer_file(deviation::Indicator::dv_min)),
                                           need(layer_file(deviation::Indicator::dv_max)));
        store.daily_stats = deviation::parse_daily_stats_csv(need(kDailyStats));

        const auto annotations = json::parse(need(kAnnotations));
        for (const auto& [meter, a] : annotations.items()) {
            auto triage = ranking::parse_triage(a.at("triage").get<std::string>());
            if (!triage) {
                throw ParseError("unknown triage status for " + meter);
            }
            store.annotations[meter] = {*triage, a.at("comment").get<std::string>(), parse_time(a.at("updated_at")),
                                        a.at("version").get<std::uint64_t>()};
        }
        const auto ex = json::parse(need(kExclusions));
        store.exclusions_version = ex.at("version").get<std::uint64_t>();
        for (const auto& w : ex.at("windows")) {
            store.exclusions.push_back({parse_day(w.at("start")), parse_day(w.at("end"))});
        }
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("store {}: {}", dir.string(), e.what()));
    }
    store.recompute_ranking();
    return store;
}

void save_annotations(const AnalysisStore& store, const fs::path& dir) {
    write_file_atomic(dir / kAnnotations, annotations_document(store));
    write_file_atomic(dir / kCandidates, ranking::export_candidates(store.candidates()));
}

void save_exclusions(const AnalysisStore& store, const fs::path& dir) {
    write_file_atomic(dir / kExclusions, exclusions_document(store));
    write_file_atomic(dir / kCandidates, ranking::export_candidates(store.candidates()));
    write_file_atomic(dir / kManifest, manifest_json(store).dump(2) + "\n");
}

std::vector<std::string> list_runs(const fs::path& root) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const auto name = entry.path().filename().string();
        if (entry.is_directory() && !name.starts_with(".") && fs::is_regular_file(entry.path() / kManifest)) {
            out.push_back(name);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ntl::store
