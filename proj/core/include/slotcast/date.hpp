#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "slotcast/errors.hpp"

namespace slotcast {

// Plain calendar date. Arithmetic goes through the civil-day serial number so
// weekday math stays exact far outside the Unix era.
struct Date {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    auto operator<=>(const Date&) const = default;
};

constexpr bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr int days_in_month(int y, int m) {
    constexpr int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return lengths[m - 1];
}

constexpr bool is_valid(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// Days since 1970-01-01 (negative before). Howard Hinnant's civil algorithm.
constexpr std::int64_t to_serial(const Date& d) {
    const int y = d.year - (d.month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2u) / 5u
                         + static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr Date from_serial(std::int64_t serial) {
    serial += 719468;
    const std::int64_t era = (serial >= 0 ? serial : serial - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(serial - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{y + (m <= 2 ? 1 : 0), static_cast<int>(m), static_cast<int>(d)};
}

// ISO weekday, Monday = 1 .. Sunday = 7.
constexpr int weekday(const Date& d) {
    const std::int64_t s = to_serial(d); // 1970-01-01 was a Thursday (= 4)
    return static_cast<int>(((s % 7) + 10) % 7) + 1;
}

constexpr bool is_weekend(const Date& d) { return weekday(d) >= 6; }

constexpr Date add_days(const Date& d, std::int64_t n) { return from_serial(to_serial(d) + n); }

inline std::string to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

// Parses "YYYY-MM-DD". Throws MalformedRow on anything else.
inline Date parse_date(const std::string& s) {
    Date d;
    char dash1 = 0, dash2 = 0, tail = 0;
    if (std::sscanf(s.c_str(), "%d%c%d%c%d%c", &d.year, &dash1, &d.month, &dash2, &d.day, &tail) != 5
        || dash1 != '-' || dash2 != '-' || !is_valid(d)) {
        throw MalformedRow("bad date: '" + s + "'");
    }
    return d;
}

} // namespace slotcast
