#include "ntl/service.hpp"

#include <charconv>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ntl/error.hpp"
#include "ntl/heatmap.hpp"

namespace ntl::service {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;

Reply error_reply(int status, std::string_view kind, std::string_view message) {
    return {status, json{{"error", kind}, {"message", message}}.dump()};
}

Reply not_found(std::string_view what) {
    return error_reply(404, "not_found", what);
}

Reply ok(const json& body) {
    return {200, body.dump()};
}

std::optional<std::uint64_t> parse_u64(std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return v;
}

json optional_number(std::optional<double> v) {
    return v ? json(*v) : json(nullptr);
}

json annotation_json(const store::Annotation& a) {
    return {{"triage", ranking::to_string(a.triage)},
            {"comment", a.comment},
            {"updated_at", format_rfc3339(a.updated_at)},
            {"version", a.version}};
}

json candidate_json(const ranking::CandidateRecord& r, const store::AnalysisStore& st) {
    json out{{"rank", r.rank},
             {"meter_id", r.meter_id},
             {"terminal_id", r.terminal_id},
             {"dv_min_mean", r.dv_min_mean},
             {"dv_min_max", r.dv_min_max},
             {"present_days", r.present_days},
             {"pattern", r.pattern.to_string()},
             {"pattern_kind", ranking::to_string(r.pattern.kind)},
             {"pattern_date", r.pattern.date ? json(format_date(*r.pattern.date)) : json(nullptr)},
             {"triage", ranking::to_string(r.triage)},
             {"comment", r.comment},
             {"version", 0},
             {"updated_at", nullptr}};
    if (auto it = st.annotations.find(r.meter_id); it != st.annotations.end()) {
        out["version"] = it->second.version;
        out["updated_at"] = format_rfc3339(it->second.updated_at);
    }
    return out;
}

json windows_json(const std::vector<ranking::ExclusionWindow>& windows) {
    json out = json::array();
    for (const auto& w : windows) {
        out.push_back({{"start", format_date(w.start)}, {"end", format_date(w.end)}});
    }
    return out;
}

json candidates_json(const store::AnalysisStore& st, std::size_t limit) {
    json list = json::array();
    for (const auto& r : st.candidates(limit)) {
        list.push_back(candidate_json(r, st));
    }
    return {{"run_id", st.run_id},
            {"top_k", st.top_k},
            {"ranked", st.ranking.size()},
            {"exclusions", windows_json(st.exclusions)},
            {"exclusions_version", st.exclusions_version},
            {"ranking_updated_at", format_rfc3339(st.provenance.ranking_updated_at)},
            {"candidates", std::move(list)}};
}

std::optional<ranking::ExclusionWindow> parse_window(const json& w) {
    if (w.is_string()) {
        return ranking::parse_exclusion(w.get<std::string>());
    }
    if (!w.is_object() || !w.contains("start") || !w.contains("end") || !w["start"].is_string() ||
        !w["end"].is_string()) {
        return std::nullopt;
    }
    auto start = parse_date(w["start"].get<std::string>());
    auto end = parse_date(w["end"].get<std::string>());
    if (!start || !end || !(*start < *end)) {
        return std::nullopt;
    }
    return ranking::ExclusionWindow{*start, *end};
}

}  // namespace

Service::Service(fs::path root) : root_(std::move(root)) {}

std::shared_ptr<Service::Entry> Service::find(std::string_view run_id) {
    if (run_id.empty() || run_id.front() == '.' || run_id.find_first_of("/\\") != std::string_view::npos) {
        return nullptr;
    }
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(run_id); it != cache_.end()) {
        return it->second;
    }
    const auto dir = root_ / std::string(run_id);
    if (!fs::is_regular_file(dir / "manifest.json")) {
        return nullptr;
    }
    auto entry = std::make_shared<Entry>();
    entry->dir = dir;
    entry->store = store::load(dir);
    cache_.emplace(std::string(run_id), entry);
    return entry;
}

Reply Service::list_runs() {
    json runs = json::array();
    for (const auto& id : store::list_runs(root_)) {
        auto entry = find(id);
        if (!entry) {
            continue;
        }
        std::shared_lock lock(entry->mutex);
        const auto& st = entry->store;
        runs.push_back({{"run_id", id},
                        {"meters", st.matrix.meter_count()},
                        {"days", st.matrix.day_count()},
                        {"first_day", format_date(st.matrix.first_day())},
                        {"top_k", st.top_k},
                        {"created_at", format_rfc3339(st.provenance.created_at)},
                        {"ranking_updated_at", format_rfc3339(st.provenance.ranking_updated_at)}});
    }
    return ok({{"runs", std::move(runs)}});
}

Reply Service::heatmap(std::string_view run_id, std::optional<std::string_view> indicator,
                       std::optional<std::string_view> top) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    const auto ind = deviation::parse_indicator(indicator.value_or("dv_min"));
    if (!ind) {
        return error_reply(422, "invalid_indicator", "indicator must be dv_min, dv_mean or dv_max");
    }
    std::optional<std::size_t> top_k;
    if (top && !top->empty()) {
        auto n = parse_u64(*top);
        if (!n || *n == 0) {
            return error_reply(422, "invalid_top", "top must be a positive integer");
        }
        top_k = static_cast<std::size_t>(*n);
    }
    std::shared_lock lock(entry->mutex);
    return {200, heatmap::to_json(heatmap::export_heatmap(entry->store, *ind, top_k))};
}

Reply Service::candidates(std::string_view run_id, std::optional<std::string_view> top) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    std::shared_lock lock(entry->mutex);
    std::size_t limit = entry->store.top_k;
    if (top && !top->empty()) {
        if (*top == "all") {
            limit = entry->store.ranking.size();
        } else if (auto n = parse_u64(*top); n && *n > 0) {
            limit = static_cast<std::size_t>(*n);
        } else {
            return error_reply(422, "invalid_top", "top must be a positive integer or 'all'");
        }
    }
    return ok(candidates_json(entry->store, limit));
}

Reply Service::meter_series(std::string_view run_id, std::string_view meter_id) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    std::shared_lock lock(entry->mutex);
    const auto& st = entry->store;
    const auto row = st.matrix.meter_index(meter_id);
    if (!row) {
        return not_found("unknown meter");
    }
    std::map<std::pair<Date, deviation::Source>, const deviation::DailyVoltageStats*> stats;
    for (const auto& s : st.daily_stats) {
        if (s.meter_id == meter_id) {
            stats[{s.day, s.source}] = &s;
        }
    }
    auto stats_json = [&](Date d, deviation::Source src) -> json {
        auto it = stats.find({d, src});
        if (it == stats.end()) {
            return nullptr;
        }
        const auto& s = *it->second;
        return {{"v_min", s.v_min}, {"v_mean", s.v_mean}, {"v_max", s.v_max}, {"sample_count", s.sample_count}};
    };
    json days = json::array();
    for (std::size_t j = 0; j < st.matrix.day_count(); ++j) {
        const auto d = st.matrix.day(j);
        using deviation::Indicator;
        days.push_back({{"day", format_date(d)},
                        {"dv_mean", optional_number(st.matrix.at(Indicator::dv_mean, *row, j))},
                        {"dv_min", optional_number(st.matrix.at(Indicator::dv_min, *row, j))},
                        {"dv_max", optional_number(st.matrix.at(Indicator::dv_max, *row, j))},
                        {"excluded", ranking::excluded(d, st.exclusions)},
                        {"simulated", stats_json(d, deviation::Source::simulated)},
                        {"measured", stats_json(d, deviation::Source::measured)}});
    }
    const auto pattern = ranking::meter_pattern(st.matrix, *row, st.exclusions, st.pattern);
    json out{{"run_id", st.run_id},
             {"meter_id", meter_id},
             {"terminal_id", st.terminals.contains(std::string(meter_id)) ? json(st.terminals.at(std::string(meter_id)))
                                                                           : json(nullptr)},
             {"threshold", st.pattern.threshold},
             {"pattern", pattern.to_string()},
             {"pattern_kind", ranking::to_string(pattern.kind)},
             {"pattern_date", pattern.date ? json(format_date(*pattern.date)) : json(nullptr)},
             {"rank", nullptr},
             {"annotation", nullptr},
             {"days", std::move(days)}};
    for (const auto& r : st.ranking) {
        if (r.meter_id == meter_id) {
            out["rank"] = r.rank;
        }
    }
    if (auto it = st.annotations.find(std::string(meter_id)); it != st.annotations.end()) {
        out["annotation"] = annotation_json(it->second);
    }
    return ok(out);
}

Reply Service::put_triage(std::string_view run_id, std::string_view meter_id, std::string_view body) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        return error_reply(400, "bad_request", "body must be a JSON object");
    }
    if (!doc.contains("status") || !doc["status"].is_string()) {
        return error_reply(422, "invalid_status", "status is required");
    }
    const auto status = ranking::parse_triage(doc["status"].get<std::string>());
    if (!status) {
        return error_reply(422, "invalid_status", "unknown triage status '" + doc["status"].get<std::string>() + "'");
    }
    if (doc.contains("comment") && !doc["comment"].is_string() && !doc["comment"].is_null()) {
        return error_reply(422, "invalid_comment", "comment must be a string");
    }
    if (doc.contains("version") && !doc["version"].is_number_unsigned()) {
        return error_reply(422, "invalid_version", "version must be a non-negative integer");
    }
    const std::string comment = doc.contains("comment") && doc["comment"].is_string() ? doc["comment"].get<std::string>() : "";
    const std::uint64_t version = doc.value("version", std::uint64_t{0});

    std::unique_lock lock(entry->mutex);
    auto& st = entry->store;
    if (!st.is_ranked(meter_id)) {
        return not_found("unknown meter");
    }
    auto& current = st.annotations[std::string(meter_id)];
    if (current.version != version) {
        const auto snapshot = current;
        if (snapshot.version == 0) {
            st.annotations.erase(std::string(meter_id));
        }
        return {409, json{{"error", "conflict"},
                          {"message", "stale version token"},
                          {"current", annotation_json(snapshot)}}
                         .dump()};
    }
    const auto previous = current;
    current.triage = *status;
    current.comment = comment;
    current.updated_at = store::now();
    current.version = version + 1;
    try {
        store::save_annotations(st, entry->dir);
    } catch (const std::exception& e) {
        current = previous;
        if (current.version == 0) {
            st.annotations.erase(std::string(meter_id));
        }
        return error_reply(500, "storage", e.what());
    }
    json out = annotation_json(current);
    out["meter_id"] = meter_id;
    return ok(out);
}

Reply Service::put_exclusions(std::string_view run_id, std::string_view body, std::optional<std::string_view> if_match) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        return error_reply(400, "bad_request", "body must be JSON");
    }
    json list;
    std::optional<std::uint64_t> version;
    if (doc.is_array()) {
        list = doc;
    } else if (doc.is_object() && doc.contains("windows") && doc["windows"].is_array()) {
        list = doc["windows"];
        if (doc.contains("version")) {
            if (!doc["version"].is_number_unsigned()) {
                return error_reply(422, "invalid_version", "version must be a non-negative integer");
            }
            version = doc["version"].get<std::uint64_t>();
        }
    } else {
        return error_reply(422, "invalid_windows", "expected an array of {start, end} windows");
    }
    if (!version && if_match) {
        std::string_view token = *if_match;
        if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
            token = token.substr(1, token.size() - 2);
        }
        version = parse_u64(token);
        if (!version) {
            return error_reply(422, "invalid_version", "If-Match must carry a version number");
        }
    }
    std::vector<ranking::ExclusionWindow> windows;
    for (const auto& w : list) {
        auto window = parse_window(w);
        if (!window) {
            return error_reply(422, "invalid_windows", "each window needs start < end as YYYY-MM-DD");
        }
        windows.push_back(*window);
    }

    std::unique_lock lock(entry->mutex);
    auto& st = entry->store;
    if (version.value_or(0) != st.exclusions_version) {
        return {409, json{{"error", "conflict"},
                          {"message", "stale version token"},
                          {"exclusions", windows_json(st.exclusions)},
                          {"exclusions_version", st.exclusions_version}}
                         .dump()};
    }
    const auto previous = st;
    st.exclusions = std::move(windows);
    st.exclusions_version += 1;
    st.recompute_ranking();
    st.provenance.ranking_updated_at = store::now();
    try {
        store::save_exclusions(st, entry->dir);
    } catch (const std::exception& e) {
        st = previous;
        return error_reply(500, "storage", e.what());
    }
    return ok(candidates_json(st, st.top_k));
}

Reply Service::export_candidates(std::string_view run_id) {
    auto entry = find(run_id);
    if (!entry) {
        return not_found("unknown run");
    }
    std::shared_lock lock(entry->mutex);
    return {200, ranking::export_candidates(entry->store.candidates()), "text/csv"};
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, Reply reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
        if (!req.has_param(key)) {
            return std::nullopt;
        }
        return req.get_param_value(key);
    };
    // Wraps a handler so unexpected failures become a JSON 500 instead of
    // httplib's default page.
    auto guarded = [send](auto fn) {
        return [send, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                send(res, fn(req));
            } catch (const std::exception& e) {
                send(res, error_reply(500, "internal", e.what()));
            }
        };
    };

    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, PUT, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, If-Match");
        res.status = 204;
    });
    server.Get("/runs", guarded([this](const httplib::Request&) { return list_runs(); }));
    server.Get(R"(/runs/([^/]+)/heatmap)", guarded([this, param](const httplib::Request& req) {
                   const auto indicator = param(req, "indicator");
                   const auto top = param(req, "top");
                   return heatmap(req.matches[1].str(), indicator, top);
               }));
    server.Get(R"(/runs/([^/]+)/candidates)", guarded([this, param](const httplib::Request& req) {
                   const auto top = param(req, "top");
                   return candidates(req.matches[1].str(), top);
               }));
    server.Get(R"(/runs/([^/]+)/meters/([^/]+)/series)", guarded([this](const httplib::Request& req) {
                   return meter_series(req.matches[1].str(), req.matches[2].str());
               }));
    server.Put(R"(/runs/([^/]+)/candidates/([^/]+)/triage)", guarded([this](const httplib::Request& req) {
                   return put_triage(req.matches[1].str(), req.matches[2].str(), req.body);
               }));
    server.Put(R"(/runs/([^/]+)/exclusions)", guarded([this](const httplib::Request& req) {
                   std::optional<std::string> if_match;
                   if (req.has_header("If-Match")) {
                       if_match = req.get_header_value("If-Match");
                   }
                   return put_exclusions(req.matches[1].str(), req.body, if_match);
               }));
    server.Get(R"(/runs/([^/]+)/export/candidates\.csv)", guarded([this](const httplib::Request& req) {
                   return export_candidates(req.matches[1].str());
               }));
}

std::optional<BindAddress> parse_bind(std::string_view text) {
    BindAddress out;
    std::string_view port = text;
    if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
        out.host = std::string(text.substr(0, colon));
        port = text.substr(colon + 1);
        if (out.host.empty()) {
            return std::nullopt;
        }
    }
    auto p = parse_u64(port);
    if (!p || *p > 65535) {
        return std::nullopt;
    }
    out.port = static_cast<int>(*p);
    return out;
}

void serve(const fs::path& root, const BindAddress& bind) {
    if (!fs::is_directory(root)) {
        throw Error("store directory not found: " + root.string());
    }
    Service service(root);
    httplib::Server server;
    service.mount(server);
    if (!server.bind_to_port(bind.host, bind.port)) {
        throw Error(fmt::format("cannot bind {}:{}", bind.host, bind.port));
    }
    server.listen_after_bind();
}

}  // namespace ntl::service
