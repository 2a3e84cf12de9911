#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "regimetrade/strategy.hpp"

using namespace regimetrade;

namespace {

PriceSeries make_prices(const std::vector<double>& closes) {
    PriceSeries s;
    Date d{2020, 1, 6};
    for (double c : closes) {
        s.points.push_back({d, c});
        d = next_weekday(d);
    }
    return s;
}

std::vector<Regime> parse_regimes(const std::string& code) {
    std::vector<Regime> out;
    for (char c : code) {
        switch (c) {
            case 'S': out.push_back(Regime::Stationary); break;
            case 'I': out.push_back(Regime::Intermediate); break;
            case 'N': out.push_back(Regime::NonStationary); break;
            default: out.push_back(Regime::Unclassifiable); break;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("moving_average basics") {
    std::vector<double> flat(10, 7.0);
    CHECK(moving_average(flat, 5, 9) == 7.0);

    std::vector<double> ramp = {1, 2, 3, 4, 5};
    CHECK(moving_average(ramp, 5, 4) == 3.0);

    // sliding by one day shifts the mean by (new - dropped) / n
    std::vector<double> v = {3, 1, 4, 1, 5, 9, 2, 6};
    const double delta = moving_average(v, 4, 5) - moving_average(v, 4, 4);
    CHECK(delta == Catch::Approx((v[5] - v[1]) / 4.0).margin(1e-12));

    CHECK_THROWS_AS(moving_average(ramp, 5, 3), ValidationError);
}

TEST_CASE("ma_trend slope sign with ties up") {
    std::vector<double> rising = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(ma_trend(rising, 3, 7) == Trend::Up);
    std::vector<double> falling = {8, 7, 6, 5, 4, 3, 2, 1};
    CHECK(ma_trend(falling, 3, 7) == Trend::Down);
    std::vector<double> flat(8, 5.0);
    CHECK(ma_trend(flat, 3, 7) == Trend::Up);  // tie rule
    CHECK_THROWS_AS(ma_trend(rising, 3, 4), ValidationError);
}

TEST_CASE("psych_line counts up-days in the trailing window") {
    std::vector<double> rising = {1, 2, 3, 4, 5, 6};
    CHECK(psych_line(rising, 3, 5) == 1.0);
    std::vector<double> falling = {6, 5, 4, 3, 2, 1};
    CHECK(psych_line(falling, 3, 5) == 0.0);

    // 6 up-moves among the last 9 changes
    std::vector<double> mixed = {10, 11, 10, 12, 13, 12, 14, 13, 15, 16};
    CHECK(psych_line(mixed, 9, 9) == Catch::Approx(6.0 / 9.0));

    // unchanged close counts as not increased
    std::vector<double> steady = {10, 10, 10, 10};
    CHECK(psych_line(steady, 3, 3) == 0.0);

    CHECK_THROWS_AS(psych_line(rising, 6, 5), ValidationError);
}

TEST_CASE("target_position applies the three rules") {
    std::vector<double> rising = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18};
    IndicatorParams p{3, 3, false};
    CHECK(target_position(Regime::Stationary, rising, p, 17) == Side::Long);
    CHECK(target_position(Regime::NonStationary, rising, p, 17) == Side::Short);  // Psy = 1
    CHECK(target_position(Regime::Intermediate, rising, p, 17) == Side::Flat);
    CHECK(target_position(Regime::Unclassifiable, rising, p, 17) == Side::Flat);

    // Rule 2 thresholds: Psy <= (n-1)/2n buys, >= (n+1)/2n sells
    std::vector<double> closes = {10, 11, 10, 9, 10, 9, 8, 9, 8, 7};
    IndicatorParams p9{5, 9, false};
    CHECK(psych_line(closes, 9, 9) == Catch::Approx(3.0 / 9.0));
    CHECK(target_position(Regime::NonStationary, closes, p9, 9) == Side::Long);

    // insufficient history falls back to flat
    CHECK(target_position(Regime::Stationary, rising, p, 3) == Side::Flat);
    CHECK(target_position(Regime::NonStationary, rising, p, 2) == Side::Flat);

    // even n_psy at exactly 1/2 holds the previous position
    std::vector<double> half = {10, 11, 10, 11, 10};
    IndicatorParams even{2, 4, true};
    CHECK(psych_line(half, 4, 4) == 0.5);
    CHECK(target_position(Regime::NonStationary, half, even, 4, Side::Short) == Side::Short);
}

TEST_CASE("indicator params validation") {
    CHECK_THROWS_AS(validate(IndicatorParams{1, 9, false}), ValidationError);
    CHECK_THROWS_AS(validate(IndicatorParams{5, 4, false}), ValidationError);
    CHECK_NOTHROW(validate(IndicatorParams{5, 4, true}));
}

TEST_CASE("backtest on all-intermediate regimes does nothing") {
    auto prices = make_prices({100, 101, 102, 103, 104, 105});
    auto regimes = parse_regimes("IIIIII");
    auto result = backtest(prices, regimes, IndicatorParams{2, 3, false});
    CHECK(result.trades.empty());
    CHECK(result.metrics.n_trade == 0);
    CHECK(result.metrics.profit == 0.0);
    CHECK(result.metrics.profit_factor == 0.0);
    CHECK(result.metrics.max_drawdown == 0.0);
    for (double e : result.equity) CHECK(e == 0.0);
}

TEST_CASE("backtest sign conventions") {
    // forced long from day 1 via rising MA in stationary regime
    auto prices = make_prices({100, 101, 102, 103, 104, 110});
    auto regimes = parse_regimes("SSSSSS");
    auto result = backtest(prices, regimes, IndicatorParams{2, 3, false});
    // trend computable from day 3; long executed day 4 at 104; still open
    CHECK(result.trades.empty());
    CHECK(result.open_position == Side::Long);
    CHECK(result.open_mark_to_market == Catch::Approx(6.0));
    CHECK(result.equity.back() == Catch::Approx(6.0));
}

TEST_CASE("backtest matches the 15-day hand simulation exactly") {
    auto prices = make_prices(
        {100, 102, 101, 103, 105, 104, 102, 101, 103, 106, 105, 104, 107, 109, 108});
    auto regimes = parse_regimes("IIISSNNSSINNSSI");
    auto result = backtest(prices, regimes, IndicatorParams{2, 3, false});

    REQUIRE(result.trades.size() == 5);
    const auto& t = result.trades;
    CHECK(t[0].direction == Side::Long);
    CHECK(t[0].entry_price == 105.0);
    CHECK(t[0].exit_price == 102.0);
    CHECK(t[0].pnl == Catch::Approx(-3.0).margin(1e-9));
    CHECK(t[1].direction == Side::Short);
    CHECK(t[1].pnl == Catch::Approx(1.0).margin(1e-9));
    CHECK(t[2].direction == Side::Long);
    CHECK(t[2].pnl == Catch::Approx(2.0).margin(1e-9));
    CHECK(t[3].direction == Side::Short);
    CHECK(t[3].pnl == Catch::Approx(-2.0).margin(1e-9));
    CHECK(t[4].direction == Side::Short);
    CHECK(t[4].pnl == Catch::Approx(-3.0).margin(1e-9));

    // reversal accounting: exit of one trade shares the date of the next entry
    CHECK(t[1].entry_date == t[0].exit_date);
    CHECK(t[2].entry_date == t[1].exit_date);
    CHECK(t[3].entry_date == t[2].exit_date);

    const std::vector<double> expected_equity = {0, 0,  0,  0, 0,  -1, -3, -2,
                                                 0, -3, -2, -2, -5, -3, -4};
    REQUIRE(result.equity.size() == expected_equity.size());
    for (std::size_t j = 0; j < expected_equity.size(); ++j) {
        CHECK(result.equity[j] == Catch::Approx(expected_equity[j]).margin(1e-9));
    }

    CHECK(result.metrics.n_trade == 5);
    CHECK(result.metrics.profit == Catch::Approx(-5.0).margin(1e-9));
    CHECK(result.metrics.profit_factor == Catch::Approx(3.0 / 8.0).margin(1e-9));
    CHECK(result.metrics.max_drawdown == Catch::Approx(5.0).margin(1e-9));
    CHECK(result.metrics.max_drawdown_realized == Catch::Approx(5.0).margin(1e-9));

    // equity conservation
    CHECK(result.equity.back() ==
          Catch::Approx(result.metrics.profit + result.open_mark_to_market).margin(1e-9));
    CHECK(result.open_position == Side::Long);
}

TEST_CASE("no lookahead: truncation preserves executed positions") {
    auto prices = make_prices(
        {100, 102, 101, 103, 105, 104, 102, 101, 103, 106, 105, 104, 107, 109, 108});
    auto regimes = parse_regimes("IIISSNNSSINNSSI");
    IndicatorParams params{2, 3, false};
    auto full = backtest(prices, regimes, params);
    for (std::size_t cut = 5; cut < prices.size(); ++cut) {
        PriceSeries trunc;
        trunc.points.assign(prices.points.begin(),
                            prices.points.begin() + static_cast<std::ptrdiff_t>(cut));
        auto sub = backtest(trunc, std::span(regimes).subspan(0, cut), params);
        for (std::size_t j = 0; j < cut; ++j) {
            CHECK(sub.position[j] == full.position[j]);
        }
    }
}

TEST_CASE("metrics closed forms") {
    std::vector<Trade> trades(3);
    trades[0].pnl = 10.0;
    trades[1].pnl = -5.0;
    trades[2].pnl = 5.0;
    std::vector<double> equity = {0, 10, 4, 12, 7};
    std::vector<double> realized = {0, 10, 5, 10, 10};
    auto m = compute_metrics(equity, realized, trades);
    CHECK(m.n_trade == 3);
    CHECK(m.profit == 10.0);
    CHECK(m.profit_factor == 3.0);
    CHECK(m.max_drawdown == 6.0);

    std::vector<Trade> winners(2);
    winners[0].pnl = 4.0;
    winners[1].pnl = 1.0;
    auto w = compute_metrics(equity, realized, winners);
    CHECK(std::isinf(w.profit_factor));
    CHECK(w.profit_factor > 0);
}

TEST_CASE("sweep enumerates the grid sorted by profit") {
    auto prices = make_prices(
        {100, 102, 101, 103, 105, 104, 102, 101, 103, 106, 105, 104, 107, 109, 108});
    auto regimes = parse_regimes("IIISSNNSSINNSSI");
    std::vector<int> n_ma = {2, 3};
    std::vector<int> n_psy = {3, 5};
    auto rows = sweep(prices, regimes, n_ma, n_psy);
    REQUIRE(rows.size() == 4);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        CHECK(rows[r - 1].metrics.profit >= rows[r].metrics.profit);
    }

    // single-point grid equals a direct backtest
    auto single = sweep(prices, regimes, std::vector<int>{2}, std::vector<int>{3});
    REQUIRE(single.size() == 1);
    auto direct = backtest(prices, regimes, IndicatorParams{2, 3, false});
    CHECK(single[0].metrics.profit == direct.metrics.profit);
    CHECK(single[0].metrics.n_trade == direct.metrics.n_trade);

    // rule2-only on all-stationary regimes never trades
    auto stationary = parse_regimes("SSSSSSSSSSSSSSS");
    auto r2 = sweep(prices, stationary, std::vector<int>{2}, std::vector<int>{3},
                    RuleMode::Rule2Only);
    CHECK(r2[0].metrics.n_trade == 0);
    CHECK(r2[0].metrics.profit == 0.0);
}

TEST_CASE("three-rule MDD beats MA-only on the regime-switch fixture") {
    // Steady uptrend (stationary), then a sharp oscillation (non-stationary),
    // then recovery. MA-only is whipsawed by the oscillation; the contrarian
    // psychological line profits from it.
    std::vector<double> closes;
    std::vector<Regime> regimes;
    double level = 100.0;
    for (int k = 0; k < 30; ++k) {
        closes.push_back(level);
        regimes.push_back(Regime::Stationary);
        level += 0.5;
    }
    for (int k = 0; k < 24; ++k) {
        const double swing = (k / 3) % 2 == 0 ? -8.0 : 8.0;
        closes.push_back(level + swing + 0.3 * (k % 3));
        regimes.push_back(Regime::NonStationary);
    }
    for (int k = 0; k < 20; ++k) {
        closes.push_back(level);
        regimes.push_back(Regime::Stationary);
        level += 0.5;
    }
    auto prices = make_prices(closes);
    IndicatorParams params{5, 3, false};
    auto proposed = backtest(prices, regimes, params, RuleMode::Full);
    auto ma_only = backtest(prices, regimes, params, RuleMode::MaOnly);
    CHECK(proposed.metrics.max_drawdown <= ma_only.metrics.max_drawdown);
}

TEST_CASE("backtest rejects misaligned inputs") {
    auto prices = make_prices({100, 101, 102});
    auto regimes = parse_regimes("II");
    CHECK_THROWS_AS(backtest(prices, regimes, IndicatorParams{2, 3, false}), ValidationError);
}
