#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hydroens {

/// Calendar month used to key monthly quantities (SST features, weights).
struct MonthKey {
    int year = 1970;
    int month = 1;  // 1..12

    auto operator<=>(const MonthKey&) const = default;

    /// Months since 1970-01.
    std::int64_t index() const noexcept { return std::int64_t{year - 1970} * 12 + (month - 1); }
    static MonthKey from_index(std::int64_t index) noexcept;
    MonthKey next() const noexcept { return from_index(index() + 1); }

    std::string to_string() const;                             // "YYYY-MM"
    static std::optional<MonthKey> parse(std::string_view text);  // "YYYY-MM"
};

/// Hour counter since 1970-01-01T00:00, timezone-naive. Calendar fields are
/// only materialized at I/O boundaries.
class HourStamp {
public:
    constexpr HourStamp() = default;
    constexpr explicit HourStamp(std::int64_t hours) : hours_(hours) {}

    static HourStamp from_civil(int year, int month, int day, int hour = 0);

    constexpr std::int64_t hours() const noexcept { return hours_; }

    int year() const;
    int month() const;
    int day() const;
    int hour_of_day() const;
    MonthKey month_key() const;

    constexpr HourStamp operator+(std::int64_t h) const noexcept { return HourStamp{hours_ + h}; }
    constexpr HourStamp operator-(std::int64_t h) const noexcept { return HourStamp{hours_ - h}; }
    constexpr std::int64_t operator-(HourStamp other) const noexcept { return hours_ - other.hours_; }
    constexpr auto operator<=>(const HourStamp&) const = default;

    /// ISO-like "YYYY-MM-DDTHH:00".
    std::string to_string() const;
    /// Accepts "YYYY-MM-DDTHH:MM" or "YYYY-MM-DD HH:MM" with MM == 00.
    static std::optional<HourStamp> parse(std::string_view text);

private:
    std::int64_t hours_ = 0;
};

/// Number of hours in the given calendar month.
int hours_in_month(MonthKey month);

}  // namespace hydroens
