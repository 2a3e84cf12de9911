#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regimetrade/errors.hpp"
#include "regimetrade/prices.hpp"

namespace regimetrade {

inline constexpr std::size_t kDefaultWindow = 100;
inline constexpr int kTransformCount = 19;
inline constexpr int kPairCount = 171;  // C(19,2)

/// Continuously compounded returns: values[k] = log close(k+1) - log close(k).
inline std::vector<double> to_ccr(const PriceSeries& prices) {
    if (prices.size() < 2) throw ValidationError("need at least 2 prices for CCR");
    std::vector<double> out;
    out.reserve(prices.size() - 1);
    for (std::size_t k = 0; k + 1 < prices.size(); ++k) {
        out.push_back(std::log(prices[k + 1].close) - std::log(prices[k].close));
    }
    return out;
}

/// The N+1 returns ending on day i: x(i-N), ..., x(i).
inline std::vector<double> cut_window(std::span<const double> ccr, std::size_t i, std::size_t n) {
    if (i < n) {
        throw ValidationError("insufficient history: window end " + std::to_string(i) +
                              " < window length " + std::to_string(n));
    }
    if (i >= ccr.size()) {
        throw ValidationError("window end " + std::to_string(i) + " past series end");
    }
    return {ccr.begin() + static_cast<std::ptrdiff_t>(i - n),
            ccr.begin() + static_cast<std::ptrdiff_t>(i + 1)};
}

/// Centers and scales to sample mean 0 and variance 1 (denominator N+1).
/// A constant window has no scale; it is reported as degenerate (nullopt)
/// and the day becomes non-classifiable.
inline std::optional<std::vector<double>> normalize(std::span<const double> window) {
    const auto n = window.size();
    const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
    if (*lo == *hi) return std::nullopt;  // constant window, rounding-proof
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (var <= 0.0) return std::nullopt;
    const double scale = 1.0 / std::sqrt(var);
    std::vector<double> out;
    out.reserve(n);
    for (double v : window) out.push_back((v - mean) * scale);
    return out;
}

/// Start offset of each transform: the largest lag it references.
inline constexpr std::array<int, kTransformCount> kTransformOffsets = {
    0, 0, 0, 1, 0, 1, 2, 0, 1, 2, 1, 3, 0, 1, 2, 1, 3, 2, 4};

/// Total degree (exponent sum) of each transform; odd-degree transforms
/// flip sign when the window is negated.
inline constexpr std::array<int, kTransformCount> kTransformDegrees = {
    1, 2, 3, 2, 4, 3, 2, 5, 4, 3, 3, 2, 6, 5, 4, 4, 3, 3, 2};

/// The 19 nonlinear component series built from a normalized window.
/// Component t covers n = kTransformOffsets[t] .. N.
inline std::array<std::vector<double>, kTransformCount> apply_transforms(
    std::span<const double> w) {
    const auto len = w.size();
    std::array<std::vector<double>, kTransformCount> out;
    for (int t = 0; t < kTransformCount; ++t) {
        out[static_cast<std::size_t>(t)].reserve(len - static_cast<std::size_t>(kTransformOffsets[static_cast<std::size_t>(t)]));
    }
    auto p2 = [](double v) { return v * v; };
    auto p3 = [&](double v) { return v * v * v; };
    for (std::size_t n = 0; n < len; ++n) {
        const double x0 = w[n];
        out[0].push_back(x0);
        out[1].push_back(p2(x0));
        out[2].push_back(p3(x0));
        out[4].push_back(p2(p2(x0)));
        out[7].push_back(p2(p2(x0)) * x0);
        out[12].push_back(p3(p2(x0)));
        if (n >= 1) {
            const double x1 = w[n - 1];
            out[3].push_back(x0 * x1);
            out[5].push_back(p2(x0) * x1);
            out[8].push_back(p3(x0) * x1);
            out[10].push_back(x0 * p2(x1));
            out[13].push_back(p2(p2(x0)) * x1);
            out[15].push_back(p2(x0) * p2(x1));
        }
        if (n >= 2) {
            const double x2 = w[n - 2];
            out[6].push_back(x0 * x2);
            out[9].push_back(p2(x0) * x2);
            out[14].push_back(p3(x0) * x2);
            out[17].push_back(x0 * w[n - 1] * x2);
        }
        if (n >= 3) {
            const double x3 = w[n - 3];
            out[11].push_back(x0 * x3);
            out[16].push_back(p2(x0) * x3);
        }
        if (n >= 4) {
            out[18].push_back(x0 * w[n - 4]);
        }
    }
    return out;
}

/// Two aligned component series, truncated to common support.
struct PairSeries {
    int first = 0;   // transform index i
    int second = 0;  // transform index j, i < j
    int offset = 0;  // max of the two transform offsets
    std::vector<double> a;
    std::vector<double> b;

    std::size_t size() const { return a.size(); }
};

/// All C(19,2) = 171 pairs in lexicographic (i, j) order.
inline std::vector<PairSeries> build_pairs(
    const std::array<std::vector<double>, kTransformCount>& comps) {
    std::vector<PairSeries> pairs;
    pairs.reserve(kPairCount);
    for (int i = 0; i < kTransformCount; ++i) {
        for (int j = i + 1; j < kTransformCount; ++j) {
            PairSeries p;
            p.first = i;
            p.second = j;
            p.offset = std::max(kTransformOffsets[static_cast<std::size_t>(i)],
                                kTransformOffsets[static_cast<std::size_t>(j)]);
            const auto skip_a = static_cast<std::size_t>(p.offset - kTransformOffsets[static_cast<std::size_t>(i)]);
            const auto skip_b = static_cast<std::size_t>(p.offset - kTransformOffsets[static_cast<std::size_t>(j)]);
            const auto& ca = comps[static_cast<std::size_t>(i)];
            const auto& cb = comps[static_cast<std::size_t>(j)];
            p.a.assign(ca.begin() + static_cast<std::ptrdiff_t>(skip_a), ca.end());
            p.b.assign(cb.begin() + static_cast<std::ptrdiff_t>(skip_b), cb.end());
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

}  // namespace regimetrade
