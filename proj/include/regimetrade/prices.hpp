#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "regimetrade/dates.hpp"
#include "regimetrade/errors.hpp"

namespace regimetrade {

struct PricePoint {
    Date date;
    double close = 0.0;

    bool operator==(const PricePoint&) const = default;
};

/// Daily closing prices, strictly increasing by date, all closes positive.
struct PriceSeries {
    std::vector<PricePoint> points;

    std::size_t size() const { return points.size(); }
    const PricePoint& operator[](std::size_t i) const { return points[i]; }

    std::vector<double> closes() const {
        std::vector<double> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(p.close);
        return out;
    }

    bool operator==(const PriceSeries&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Validates the PriceSeries invariants, sorting out-of-order rows and
/// rejecting duplicates and non-positive closes.
inline void validate_prices(PriceSeries& series, std::vector<std::string>* warnings = nullptr) {
    if (series.points.size() < 2) {
        throw ValidationError("price series needs at least 2 rows, got " +
                              std::to_string(series.points.size()));
    }
    if (!std::is_sorted(series.points.begin(), series.points.end(),
                        [](const PricePoint& a, const PricePoint& b) { return a.date < b.date; })) {
        if (warnings) warnings->push_back("input rows out of order; sorted ascending by date");
        std::stable_sort(series.points.begin(), series.points.end(),
                         [](const PricePoint& a, const PricePoint& b) { return a.date < b.date; });
    }
    for (std::size_t i = 0; i < series.points.size(); ++i) {
        if (series.points[i].close <= 0.0) {
            throw ValidationError("non-positive close " + std::to_string(series.points[i].close) +
                                  " on " + to_string(series.points[i].date));
        }
        if (i > 0 && series.points[i].date == series.points[i - 1].date) {
            throw ValidationError("duplicate date " + to_string(series.points[i].date));
        }
    }
}

/// Loads `date,close` CSV (header row required, extra columns ignored).
inline PriceSeries load_csv(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    std::ptrdiff_t date_col = -1, close_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto name = detail::lower(header[c]);
        if (name == "date") date_col = static_cast<std::ptrdiff_t>(c);
        if (name == "close") close_col = static_cast<std::ptrdiff_t>(c);
    }
    if (date_col < 0 || close_col < 0) {
        throw ValidationError(path + ": header must contain 'date' and 'close' columns");
    }

    PriceSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        auto need = static_cast<std::size_t>(std::max(date_col, close_col)) + 1;
        if (fields.size() < need) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(need) + " columns, got " +
                                  std::to_string(fields.size()));
        }
        PricePoint p;
        try {
            p.date = parse_date(fields[static_cast<std::size_t>(date_col)]);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const std::string& close_text = fields[static_cast<std::size_t>(close_col)];
        std::size_t consumed = 0;
        try {
            p.close = std::stod(close_text, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed == 0 || consumed != close_text.size()) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": bad close value '" +
                                  close_text + "'");
        }
        if (p.close <= 0.0) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": close must be positive, got '" + close_text + "'");
        }
        series.points.push_back(p);
    }
    validate_prices(series, warnings);
    return series;
}

/// Writes `date,close` CSV with full round-trip precision.
inline void save_csv(const PriceSeries& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "date,close\n";
    char buf[64];
    for (const auto& p : series.points) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.close);
        out << to_string(p.date) << ',' << buf << '\n';
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

enum class SynthKind { GaussianWalk, VarianceSwitch };

/// Synthetic price generator spec; deterministic given the seed.
struct SynthSpec {
    SynthKind kind = SynthKind::GaussianWalk;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    double mu = 0.0;          // gaussian-walk drift of daily log-return
    double sigma = 0.01;      // gaussian-walk volatility
    double sigma_before = 0.01;  // variance-switch
    double sigma_after = 0.05;
    std::size_t switch_day = 0;
    double start_price = 10000.0;
    Date start_date{2000, 1, 3};
};

inline void validate(const SynthSpec& spec) {
    if (spec.length < 2) throw ValidationError("synth length must be >= 2");
    if (spec.kind == SynthKind::GaussianWalk) {
        if (spec.sigma < 0.0) throw ValidationError("sigma must be >= 0");
    } else {
        if (spec.sigma_before <= 0.0 || spec.sigma_after <= 0.0) {
            throw ValidationError("sigma-before and sigma-after must be > 0");
        }
        if (spec.switch_day == 0 || spec.switch_day >= spec.length) {
            throw ValidationError("switch-day must satisfy 0 < switch-day < length");
        }
    }
    if (spec.start_price <= 0.0) throw ValidationError("start price must be > 0");
}

/// Random-walk log prices on consecutive weekdays. Pure function of the spec.
inline PriceSeries generate(const SynthSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    PriceSeries series;
    series.points.reserve(spec.length);
    Date date = spec.start_date;
    if (weekday(date) >= 5) date = next_weekday(date);
    double log_price = std::log(spec.start_price);
    for (std::size_t k = 0; k < spec.length; ++k) {
        if (k > 0) {
            double ret;
            if (spec.kind == SynthKind::GaussianWalk) {
                ret = spec.mu + spec.sigma * gauss(rng);
            } else {
                double sigma = (k <= spec.switch_day) ? spec.sigma_before : spec.sigma_after;
                ret = sigma * gauss(rng);
            }
            log_price += ret;
            date = next_weekday(date);
        }
        series.points.push_back({date, std::exp(log_price)});
    }
    return series;
}

}  // namespace regimetrade
