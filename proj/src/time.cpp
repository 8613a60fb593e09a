#include "ntl/time.hpp"

#include <charconv>

#include <fmt/format.h>

namespace ntl {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > text.size()) {
        return false;
    }
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (text[i] < '0' || text[i] > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, out);
    return ec == std::errc{} && ptr == text.data() + pos + width;
}

std::optional<Date> parse_ymd(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !read_int(text, 0, 4, y) ||
        !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return sys_days{ymd};
}

std::optional<minutes> parse_offset(std::string_view text) {
    if (text == "Z" || text == "z") {
        return minutes{0};
    }
    if (text.empty() || (text[0] != '+' && text[0] != '-')) {
        return std::nullopt;
    }
    int h = 0, m = 0;
    if (text.size() == 6 && text[3] == ':') {
        if (!read_int(text, 1, 2, h) || !read_int(text, 4, 2, m)) {
            return std::nullopt;
        }
    } else if (text.size() == 5) {
        if (!read_int(text, 1, 2, h) || !read_int(text, 3, 2, m)) {
            return std::nullopt;
        }
    } else {
        return std::nullopt;
    }
    if (h > 23 || m > 59) {
        return std::nullopt;
    }
    minutes off{h * 60 + m};
    return text[0] == '-' ? -off : off;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    auto date = parse_ymd(text);
    if (!date || text.size() < 20) {
        return std::nullopt;
    }
    char sep = text[10];
    if (sep != 'T' && sep != 't' && sep != ' ') {
        return std::nullopt;
    }
    int hh = 0, mm = 0, ss = 0;
    if (text[13] != ':' || text[16] != ':' || !read_int(text, 11, 2, hh) ||
        !read_int(text, 14, 2, mm) || !read_int(text, 17, 2, ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        return std::nullopt;
    }
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            ++pos;
            ++digits;
        }
        if (digits == 0) {
            return std::nullopt;
        }
    }
    auto offset = parse_offset(text.substr(pos));
    if (!offset) {
        return std::nullopt;
    }
    return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - *offset;
}

std::string format_rfc3339(Timestamp t) {
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10) {
        return std::nullopt;
    }
    return parse_ymd(text);
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::optional<DayClock> DayClock::parse(std::string_view text) {
    if (text == "UTC" || text == "utc") {
        return DayClock{};
    }
    auto off = parse_offset(text);
    if (!off) {
        return std::nullopt;
    }
    return DayClock{*off};
}

Date DayClock::day_of(Timestamp t) const {
    return floor<days>(t + offset_);
}

Timestamp DayClock::day_start(Date d) const {
    return Timestamp{d} - offset_;
}

std::string DayClock::to_string() const {
    if (offset_.count() == 0) {
        return "UTC";
    }
    const auto total = offset_.count();
    const auto mag = total < 0 ? -total : total;
    return fmt::format("{}{:02d}:{:02d}", total < 0 ? '-' : '+', mag / 60, mag % 60);
}

}  // namespace ntl
