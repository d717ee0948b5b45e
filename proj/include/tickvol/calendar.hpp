#pragma once

// Civil dates as days since 1970-01-01 and the US Eastern exchange clock.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "tickvol/error.hpp"

namespace tickvol::calendar {

inline constexpr std::int64_t kMsPerDay = 86'400'000;
inline constexpr std::int64_t kMsPerHour = 3'600'000;

/// Days since 1970-01-01 of a proleptic Gregorian date.
constexpr std::int32_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

struct Civil {
    int year;
    unsigned month;
    unsigned day;
};

constexpr Civil civil_from_days(std::int32_t z) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

/// 0 = Sunday.
constexpr unsigned weekday(std::int32_t days) {
    return static_cast<unsigned>(days >= -4 ? (days + 4) % 7 : (days + 5) % 7 + 6);
}

inline std::string format_date(std::int32_t days) {
    const auto c = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

/// Parses YYYY-MM-DD.
inline std::int32_t parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        std::sscanf(std::string(s).c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3 || m < 1 || m > 12 ||
        d < 1 || d > 31)
        throw InputError("bad date '" + std::string(s) + "'");
    return days_from_civil(y, m, d);
}

// n-th (1-based) Sunday of a month.
constexpr std::int32_t nth_sunday(int y, unsigned m, unsigned n) {
    const std::int32_t first = days_from_civil(y, m, 1);
    const unsigned wd = weekday(first);
    return first + static_cast<std::int32_t>((7 - wd) % 7 + 7 * (n - 1));
}

/// UTC offset of US Eastern time in hours (-4 in daylight time, -5 otherwise),
/// using the rule in force since 2007: second Sunday of March 02:00 local to
/// first Sunday of November 02:00 local.
inline int eastern_offset_hours(std::int64_t utc_ms) {
    const auto day = static_cast<std::int32_t>(utc_ms >= 0 ? utc_ms / kMsPerDay
                                                            : (utc_ms - kMsPerDay + 1) / kMsPerDay);
    const int y = civil_from_days(day).year;
    // 02:00 EST = 07:00 UTC; 02:00 EDT = 06:00 UTC.
    const std::int64_t start = nth_sunday(y, 3, 2) * kMsPerDay + 7 * kMsPerHour;
    const std::int64_t end = nth_sunday(y, 11, 1) * kMsPerDay + 6 * kMsPerHour;
    return utc_ms >= start && utc_ms < end ? -4 : -5;
}

struct LocalTime {
    std::int32_t day;    // exchange-local calendar day
    std::int64_t ms;     // milliseconds since exchange-local midnight
};

inline LocalTime to_exchange_local(std::int64_t utc_ms) {
    const std::int64_t local = utc_ms + eastern_offset_hours(utc_ms) * kMsPerHour;
    std::int64_t day = local / kMsPerDay;
    if (local < 0 && local % kMsPerDay != 0) --day;
    return {static_cast<std::int32_t>(day), local - day * kMsPerDay};
}

/// UTC epoch ms of an exchange-local wall-clock time. Times inside the spring
/// gap or the autumn overlap resolve to standard time; neither occurs in session.
inline std::int64_t from_exchange_local(std::int32_t day, std::int64_t ms) {
    const std::int64_t wall = day * kMsPerDay + ms;
    const std::int64_t guess = wall + 5 * kMsPerHour;
    const std::int64_t dst = wall + 4 * kMsPerHour;
    return eastern_offset_hours(dst) == -4 ? dst : guess;
}

}  // namespace tickvol::calendar
