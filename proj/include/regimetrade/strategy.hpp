#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "regimetrade/classifier.hpp"
#include "regimetrade/prices.hpp"

namespace regimetrade {

struct IndicatorParams {
    int n_ma = 10;
    int n_psy = 9;
    bool allow_even_psy = false;  // even n_psy leaves a Psy == 1/2 gap; opt-in
};

inline void validate(const IndicatorParams& p) {
    if (p.n_ma < 2) throw ValidationError("n_ma must be >= 2");
    if (p.n_psy < 1) throw ValidationError("n_psy must be >= 1");
    if (p.n_psy % 2 == 0 && !p.allow_even_psy) {
        throw ValidationError("n_psy must be odd (use allow_even_psy to override)");
    }
}

enum class Side { Long, Flat, Short };

inline int to_int(Side s) { return s == Side::Long ? 1 : s == Side::Short ? -1 : 0; }

/// Arithmetic mean of closes over days i-n_ma+1 .. i.
inline double moving_average(std::span<const double> closes, int n_ma, std::size_t i) {
    if (i + 1 < static_cast<std::size_t>(n_ma) || i >= closes.size()) {
        throw ValidationError("insufficient history for MA(" + std::to_string(n_ma) + ") at day " +
                              std::to_string(i));
    }
    double sum = 0.0;
    for (int k = 0; k < n_ma; ++k) sum += closes[i - static_cast<std::size_t>(k)];
    return sum / n_ma;
}

enum class Trend { Up, Down };

/// Slope sign of the moving average over one MA length; ties are Up.
inline Trend ma_trend(std::span<const double> closes, int n_ma, std::size_t i) {
    if (i + 1 < 2 * static_cast<std::size_t>(n_ma)) {
        throw ValidationError("insufficient history for MA trend at day " + std::to_string(i));
    }
    const double now = moving_average(closes, n_ma, i);
    const double before = moving_average(closes, n_ma, i - static_cast<std::size_t>(n_ma));
    return now - before >= 0.0 ? Trend::Up : Trend::Down;
}

/// Fraction of up-days among the last n_psy daily changes ending on day i.
/// An unchanged close counts as not increased.
inline double psych_line(std::span<const double> closes, int n_psy, std::size_t i) {
    if (i < static_cast<std::size_t>(n_psy) || i >= closes.size()) {
        throw ValidationError("insufficient history for Psy(" + std::to_string(n_psy) +
                              ") at day " + std::to_string(i));
    }
    int ups = 0;
    for (int k = 0; k < n_psy; ++k) {
        const std::size_t day = i - static_cast<std::size_t>(k);
        if (closes[day] > closes[day - 1]) ++ups;
    }
    return static_cast<double>(ups) / n_psy;
}

/// The three-rule position policy for day i, using information through
/// day i only. `prev` resolves the Psy == 1/2 gap of even n_psy by
/// holding; insufficient history falls back to flat.
inline Side target_position(Regime regime, std::span<const double> closes,
                            const IndicatorParams& p, std::size_t i, Side prev = Side::Flat) {
    switch (regime) {
        case Regime::Stationary: {
            if (i + 1 < 2 * static_cast<std::size_t>(p.n_ma)) return Side::Flat;
            return ma_trend(closes, p.n_ma, i) == Trend::Up ? Side::Long : Side::Short;
        }
        case Regime::NonStationary: {
            if (i < static_cast<std::size_t>(p.n_psy)) return Side::Flat;
            const double psy = psych_line(closes, p.n_psy, i);
            const double lo = (p.n_psy - 1) / (2.0 * p.n_psy);
            const double hi = (p.n_psy + 1) / (2.0 * p.n_psy);
            if (psy <= lo) return Side::Long;
            if (psy >= hi) return Side::Short;
            return prev;  // only reachable with even n_psy
        }
        default:
            return Side::Flat;
    }
}

/// One closed round trip. A reversal closes one trade and opens another
/// on the same date.
struct Trade {
    Date entry_date;
    Date exit_date;
    Side direction = Side::Flat;
    double entry_price = 0.0;
    double exit_price = 0.0;
    double pnl = 0.0;
};

struct Metrics {
    int n_trade = 0;
    double profit = 0.0;         // sum of closed-trade pnl
    double profit_factor = 0.0;  // +inf sentinel when wins but no losses
    double max_drawdown = 0.0;   // on mark-to-market equity (headline)
    double max_drawdown_realized = 0.0;
};

struct BacktestResult {
    std::vector<Trade> trades;
    std::vector<int> position;      // executed position per day, -1/0/+1
    std::vector<double> equity;     // mark-to-market cumulative pnl
    std::vector<double> realized;   // closed-trade pnl only
    Metrics metrics;
    Side open_position = Side::Flat;
    double open_mark_to_market = 0.0;
};

inline double max_drawdown(std::span<const double> equity) {
    double peak = -std::numeric_limits<double>::infinity();
    double mdd = 0.0;
    for (double e : equity) {
        peak = std::max(peak, e);
        mdd = std::max(mdd, peak - e);
    }
    return mdd;
}

inline Metrics compute_metrics(std::span<const double> equity, std::span<const double> realized,
                               std::span<const Trade> trades) {
    Metrics m;
    m.n_trade = static_cast<int>(trades.size());
    double wins = 0.0, losses = 0.0;
    for (const auto& t : trades) {
        m.profit += t.pnl;
        if (t.pnl > 0.0) wins += t.pnl;
        if (t.pnl < 0.0) losses -= t.pnl;
    }
    if (losses > 0.0) {
        m.profit_factor = wins / losses;
    } else {
        m.profit_factor = wins > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    m.max_drawdown = max_drawdown(equity);
    m.max_drawdown_realized = max_drawdown(realized);
    return m;
}

enum class RuleMode { Full, Rule2Only, MaOnly };

inline const char* to_string(RuleMode m) {
    switch (m) {
        case RuleMode::Full: return "full";
        case RuleMode::Rule2Only: return "rule2-only";
        default: return "ma-only";
    }
}

/// Next-day execution backtest: the position decided from day i's close
/// and regime is established at day i+1's close, one unit, no fees.
/// Positions open at the end stay open (mark-to-market only).
inline BacktestResult backtest(const PriceSeries& prices, std::span<const Regime> regimes,
                               const IndicatorParams& params, RuleMode mode = RuleMode::Full) {
    validate(params);
    const std::size_t n = prices.size();
    if (regimes.size() != n) {
        throw ValidationError("regimes length " + std::to_string(regimes.size()) +
                              " does not match prices length " + std::to_string(n));
    }
    const auto closes = prices.closes();

    BacktestResult result;
    result.position.resize(n);
    result.equity.resize(n);
    result.realized.resize(n);

    Side pos = Side::Flat;
    Date entry_date;
    double entry_price = 0.0;
    double realized = 0.0;
    Side pending = Side::Flat;

    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0 && pending != pos) {
            const double px = closes[j];
            if (pos != Side::Flat) {
                Trade t;
                t.entry_date = entry_date;
                t.exit_date = prices[j].date;
                t.direction = pos;
                t.entry_price = entry_price;
                t.exit_price = px;
                t.pnl = pos == Side::Long ? px - entry_price : entry_price - px;
                realized += t.pnl;
                result.trades.push_back(t);
            }
            if (pending != Side::Flat) {
                entry_date = prices[j].date;
                entry_price = px;
            }
            pos = pending;
        }

        double unrealized = 0.0;
        if (pos == Side::Long) unrealized = closes[j] - entry_price;
        if (pos == Side::Short) unrealized = entry_price - closes[j];
        result.position[j] = to_int(pos);
        result.equity[j] = realized + unrealized;
        result.realized[j] = realized;

        Regime effective = regimes[j];
        if (mode == RuleMode::Rule2Only && effective != Regime::NonStationary) {
            effective = Regime::Intermediate;  // forced flat outside non-stationary days
        } else if (mode == RuleMode::MaOnly) {
            effective = Regime::Stationary;
        }
        pending = target_position(effective, closes, params, j, pos);
    }

    result.open_position = pos;
    result.open_mark_to_market =
        pos == Side::Long ? closes[n - 1] - entry_price
        : pos == Side::Short ? entry_price - closes[n - 1]
        : 0.0;
    result.metrics = compute_metrics(result.equity, result.realized, result.trades);
    return result;
}

struct SweepRow {
    int n_ma = 0;
    int n_psy = 0;
    Metrics metrics;
};

/// One backtest per (n_ma, n_psy) combination, sorted by profit
/// descending with a (n_ma, n_psy) tie-break for determinism.
inline std::vector<SweepRow> sweep(const PriceSeries& prices, std::span<const Regime> regimes,
                                   std::span<const int> n_ma_values,
                                   std::span<const int> n_psy_values,
                                   RuleMode mode = RuleMode::Full,
                                   bool allow_even_psy = false) {
    std::vector<SweepRow> rows;
    rows.reserve(n_ma_values.size() * n_psy_values.size());
    for (int n_ma : n_ma_values) {
        for (int n_psy : n_psy_values) {
            IndicatorParams params{n_ma, n_psy, allow_even_psy};
            auto result = backtest(prices, regimes, params, mode);
            rows.push_back({n_ma, n_psy, result.metrics});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.metrics.profit != b.metrics.profit) return a.metrics.profit > b.metrics.profit;
        if (a.n_ma != b.n_ma) return a.n_ma < b.n_ma;
        return a.n_psy < b.n_psy;
    });
    return rows;
}

}  // namespace regimetrade
