#pragma once

#include <compare>
#include <cstdio>
#include <string>

#include "regimetrade/errors.hpp"

namespace regimetrade {

/// Calendar day. Only ordering and ISO 8601 formatting are needed; all
/// series arithmetic is by row position, never by calendar distance.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;
};

namespace detail {

// Days since 1970-01-01, valid for the Gregorian calendar.
// Howard Hinnant's days_from_civil.
inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline void civil_from_days(long z, int& y, int& m, int& d) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long yy = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

inline long to_serial(const Date& d) {
    return detail::days_from_civil(d.year, d.month, d.day);
}

inline Date from_serial(long serial) {
    Date d;
    detail::civil_from_days(serial, d.year, d.month, d.day);
    return d;
}

/// 0 = Monday .. 6 = Sunday.
inline int weekday(const Date& d) {
    long s = to_serial(d);
    return static_cast<int>(((s % 7) + 10) % 7);  // 1970-01-01 was a Thursday
}

inline Date next_weekday(Date d) {
    long s = to_serial(d) + 1;
    while (true) {
        int w = static_cast<int>(((s % 7) + 10) % 7);
        if (w < 5) break;
        ++s;
    }
    return from_serial(s);
}

inline std::string to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

/// Parses strict ISO 8601 "YYYY-MM-DD".
inline Date parse_date(const std::string& text) {
    int y = 0, m = 0, dd = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%d%c", &y, &m, &dd, &tail) != 3 ||
        m < 1 || m > 12 || dd < 1 || dd > 31) {
        throw ValidationError("invalid date '" + text + "' (expected YYYY-MM-DD)");
    }
    return Date{y, m, dd};
}

}  // namespace regimetrade
