#include "hydroens/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace hydroens {
namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

year_month_day civil_of(std::int64_t hours) {
    return year_month_day{sys_days{days{floor_div(hours, 24)}}};
}

bool parse_int(std::string_view text, int& out) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

MonthKey MonthKey::from_index(std::int64_t index) noexcept {
    const std::int64_t y = floor_div(index, 12);
    return MonthKey{static_cast<int>(1970 + y), static_cast<int>(index - y * 12) + 1};
}

std::string MonthKey::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

std::optional<MonthKey> MonthKey::parse(std::string_view text) {
    if (text.size() != 7 || text[4] != '-') return std::nullopt;
    MonthKey key;
    if (!parse_int(text.substr(0, 4), key.year) || !parse_int(text.substr(5, 2), key.month)) return std::nullopt;
    if (key.month < 1 || key.month > 12) return std::nullopt;
    return key;
}

HourStamp HourStamp::from_civil(int year, int month, int day, int hour) {
    const sys_days d{std::chrono::year{year} / static_cast<unsigned>(month) / static_cast<unsigned>(day)};
    return HourStamp{std::int64_t{d.time_since_epoch().count()} * 24 + hour};
}

int HourStamp::year() const { return static_cast<int>(civil_of(hours_).year()); }
int HourStamp::month() const { return static_cast<int>(static_cast<unsigned>(civil_of(hours_).month())); }
int HourStamp::day() const { return static_cast<int>(static_cast<unsigned>(civil_of(hours_).day())); }
int HourStamp::hour_of_day() const { return static_cast<int>(hours_ - floor_div(hours_, 24) * 24); }

MonthKey HourStamp::month_key() const {
    const auto ymd = civil_of(hours_);
    return MonthKey{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

std::string HourStamp::to_string() const {
    const auto ymd = civil_of(hours_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour_of_day());
    return buf;
}

std::optional<HourStamp> HourStamp::parse(std::string_view text) {
    // YYYY-MM-DDTHH:MM
    if (text.size() != 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':')
        return std::nullopt;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) || !parse_int(text.substr(8, 2), d) ||
        !parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi))
        return std::nullopt;
    if (mi != 0 || h < 0 || h > 23) return std::nullopt;
    const year_month_day ymd{std::chrono::year{y} / static_cast<unsigned>(mo) / static_cast<unsigned>(d)};
    if (!ymd.ok()) return std::nullopt;
    return from_civil(y, mo, d, h);
}

int hours_in_month(MonthKey month) {
    const auto start = HourStamp::from_civil(month.year, month.month, 1);
    const auto next_key = month.next();
    const auto end = HourStamp::from_civil(next_key.year, next_key.month, 1);
    return static_cast<int>(end - start);
}

}  // namespace hydroens
