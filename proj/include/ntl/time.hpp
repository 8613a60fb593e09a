#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace ntl {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Parses an RFC 3339 instant such as "2021-06-01T13:47:12Z" or
/// "2021-06-01T15:47:12.250+02:00". Fractional seconds are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// Maps UTC instants onto local calendar days using a fixed UTC offset.
class DayClock {
  public:
    DayClock() = default;
    explicit DayClock(std::chrono::minutes utc_offset) : offset_(utc_offset) {}

    /// Accepts "UTC", "Z", "+01:00", "-0530".
    static std::optional<DayClock> parse(std::string_view text);

    Date day_of(Timestamp t) const;
    /// UTC instant of local midnight starting `d`.
    Timestamp day_start(Date d) const;

    std::chrono::minutes offset() const { return offset_; }
    std::string to_string() const;

    friend bool operator==(const DayClock&, const DayClock&) = default;

  private:
    std::chrono::minutes offset_{0};
};

}  // namespace ntl
