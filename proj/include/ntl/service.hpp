#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "ntl/store.hpp"

namespace httplib {
class Server;
}

namespace ntl::service {

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// HTTP API over the store directories below one root. Reads of a run
/// share its lock; triage and exclusion writes take it exclusively and
/// are checked against optimistic version tokens.
class Service {
  public:
    explicit Service(std::filesystem::path root);

    Reply list_runs();
    Reply heatmap(std::string_view run_id, std::optional<std::string_view> indicator,
                  std::optional<std::string_view> top);
    Reply candidates(std::string_view run_id, std::optional<std::string_view> top = std::nullopt);
    Reply meter_series(std::string_view run_id, std::string_view meter_id);
    /// Body {"status", "comment", "version"}; a missing version counts as 0.
    Reply put_triage(std::string_view run_id, std::string_view meter_id, std::string_view body);
    /// Body is an array of {"start", "end"} windows or {"windows": [...],
    /// "version": n}; the token may also arrive as If-Match.
    Reply put_exclusions(std::string_view run_id, std::string_view body,
                         std::optional<std::string_view> if_match = std::nullopt);
    Reply export_candidates(std::string_view run_id);

    /// Registers every route on `server`.
    void mount(httplib::Server& server);

  private:
    struct Entry {
        std::shared_mutex mutex;
        std::filesystem::path dir;
        store::AnalysisStore store;
    };

    std::shared_ptr<Entry> find(std::string_view run_id);

    std::filesystem::path root_;
    std::mutex cache_mutex_;
    std::map<std::string, std::shared_ptr<Entry>, std::less<>> cache_;
};

struct BindAddress {
    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Parses "host:port" or a bare port.
std::optional<BindAddress> parse_bind(std::string_view text);

/// Serves until the process is stopped; throws ntl::Error if binding fails.
void serve(const std::filesystem::path& root, const BindAddress& bind);

}  // namespace ntl::service
