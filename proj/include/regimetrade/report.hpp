#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "regimetrade/classifier.hpp"
#include "regimetrade/errors.hpp"
#include "regimetrade/strategy.hpp"

namespace regimetrade {

/// Fixed 6-fractional-digit formatting; the one number format used in all
/// reports so identical inputs give byte-identical files.
inline std::string fixed6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

enum class ReportFormat { Csv, Json };

/// A generic tabular report record: named columns, string cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

// Numbers pass through bare, everything else is quoted.
inline std::string json_cell(const std::string& s) {
    if (s.empty()) return "\"\"";
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    if (end && *end == '\0' && !std::isalpha(static_cast<unsigned char>(s[0]))) return s;
    return json_quote(s);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

inline void write_report(const Table& table, ReportFormat format, const std::string& path) {
    auto out = detail::open_out(path);
    if (format == ReportFormat::Csv) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            out << (c ? "," : "") << table.columns[c];
        }
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
            out << '\n';
        }
    } else {
        out << "[\n";
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            out << "  {";
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                out << (c ? ", " : "") << detail::json_quote(table.columns[c]) << ": "
                    << detail::json_cell(table.rows[r][c]);
            }
            out << (r + 1 < table.rows.size() ? "},\n" : "}\n");
        }
        out << "]\n";
    }
    if (!out) throw IoError("write failure on '" + path + "'");
}

/// `date,lambda,regime` rows for the classifiable days.
inline Table classification_table(const PriceSeries& prices, std::span<const LambdaPoint> lambdas,
                                  std::span<const Regime> labels) {
    Table t;
    t.columns = {"date", "lambda", "regime"};
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const std::size_t p = lambdas[k].ccr_index + 1;
        t.rows.push_back({to_string(prices[p].date),
                          lambdas[k].degenerate ? "nan" : fixed6(lambdas[k].lambda),
                          to_string(labels[k])});
    }
    return t;
}

inline Table equity_table(const PriceSeries& prices, const BacktestResult& result) {
    Table t;
    t.columns = {"date", "position", "equity", "realized"};
    for (std::size_t j = 0; j < prices.size(); ++j) {
        t.rows.push_back({to_string(prices[j].date), std::to_string(result.position[j]),
                          fixed6(result.equity[j]), fixed6(result.realized[j])});
    }
    return t;
}

inline Table sweep_table(std::span<const SweepRow> rows) {
    Table t;
    t.columns = {"n_ma", "n_psy", "n_trade", "profit", "profit_factor", "max_drawdown"};
    for (const auto& r : rows) {
        t.rows.push_back({std::to_string(r.n_ma), std::to_string(r.n_psy),
                          std::to_string(r.metrics.n_trade), fixed6(r.metrics.profit),
                          fixed6(r.metrics.profit_factor), fixed6(r.metrics.max_drawdown)});
    }
    return t;
}

/// Ordered key/value JSON object, written by hand so key order and number
/// formatting are stable.
struct JsonObject {
    std::vector<std::pair<std::string, std::string>> fields;  // value is raw JSON

    void add_number(const std::string& key, double v) {
        fields.emplace_back(key, std::isfinite(v) ? fixed6(v) : detail::json_quote(fixed6(v)));
    }
    void add_int(const std::string& key, long v) { fields.emplace_back(key, std::to_string(v)); }
    void add_string(const std::string& key, const std::string& v) {
        fields.emplace_back(key, detail::json_quote(v));
    }
    void add_raw(const std::string& key, const std::string& raw) { fields.emplace_back(key, raw); }

    std::string dump(int indent = 0) const {
        std::string pad(static_cast<std::size_t>(indent), ' ');
        std::string inner(static_cast<std::size_t>(indent) + 2, ' ');
        std::string out = "{\n";
        for (std::size_t i = 0; i < fields.size(); ++i) {
            out += inner + detail::json_quote(fields[i].first) + ": " + fields[i].second;
            out += (i + 1 < fields.size()) ? ",\n" : "\n";
        }
        out += pad + "}";
        return out;
    }
};

inline void write_json(const JsonObject& obj, const std::string& path) {
    auto out = detail::open_out(path);
    out << obj.dump() << '\n';
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline JsonObject params_json(const IndicatorParams& p, RuleMode mode) {
    JsonObject o;
    o.add_int("n_ma", p.n_ma);
    o.add_int("n_psy", p.n_psy);
    o.add_string("mode", to_string(mode));
    return o;
}

inline void write_backtest_report(const BacktestResult& result, const IndicatorParams& params,
                                  RuleMode mode, const std::string& path) {
    JsonObject o;
    o.add_int("n_trade", result.metrics.n_trade);
    o.add_number("profit", result.metrics.profit);
    o.add_number("profit_factor", result.metrics.profit_factor);
    o.add_number("max_drawdown", result.metrics.max_drawdown);
    o.add_number("max_drawdown_realized", result.metrics.max_drawdown_realized);
    o.add_raw("params", params_json(params, mode).dump(2));
    write_json(o, path);
}

/// Loads a `--regimes` CSV: needs `date` and `regime` columns (the
/// classification CSV itself qualifies). Dates missing from the file are
/// unclassifiable.
inline std::vector<Regime> load_regimes_csv(const std::string& path, const PriceSeries& prices) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    std::ptrdiff_t date_col = -1, regime_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto name = detail::lower(header[c]);
        if (name == "date") date_col = static_cast<std::ptrdiff_t>(c);
        if (name == "regime") regime_col = static_cast<std::ptrdiff_t>(c);
    }
    if (date_col < 0 || regime_col < 0) {
        throw ValidationError(path + ": header must contain 'date' and 'regime' columns");
    }
    std::map<Date, Regime> by_date;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        auto need = static_cast<std::size_t>(std::max(date_col, regime_col)) + 1;
        if (fields.size() < need) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": too few columns");
        }
        by_date[parse_date(fields[static_cast<std::size_t>(date_col)])] =
            parse_regime(fields[static_cast<std::size_t>(regime_col)]);
    }
    std::vector<Regime> out(prices.size(), Regime::Unclassifiable);
    for (std::size_t j = 0; j < prices.size(); ++j) {
        auto it = by_date.find(prices[j].date);
        if (it != by_date.end()) out[j] = it->second;
    }
    return out;
}

}  // namespace regimetrade
