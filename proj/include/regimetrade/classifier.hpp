#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "regimetrade/km2o.hpp"
#include "regimetrade/transforms.hpp"

namespace regimetrade {

inline constexpr double kDefaultLambda1 = 165.5 / 171.0;
inline constexpr double kDefaultLambda2 = 100.5 / 171.0;

enum class Regime { Stationary, Intermediate, NonStationary, Unclassifiable };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Stationary: return "stationary";
        case Regime::Intermediate: return "intermediate";
        case Regime::NonStationary: return "non-stationary";
        default: return "unclassifiable";
    }
}

inline Regime parse_regime(const std::string& text) {
    if (text == "stationary") return Regime::Stationary;
    if (text == "intermediate") return Regime::Intermediate;
    if (text == "non-stationary") return Regime::NonStationary;
    if (text == "unclassifiable") return Regime::Unclassifiable;
    throw ValidationError("unknown regime label '" + text + "'");
}

/// Stationarity parameter for one day: passed pairs / 171.
struct LambdaPoint {
    std::size_t ccr_index = 0;  // window end; price-series index is +1
    double lambda = 0.0;
    bool degenerate = false;    // constant window, day not classifiable
};

/// Lambda for one 101-point window (already cut from the CCR series).
/// Returns nullopt when the window is degenerate.
inline std::optional<double> lambda_for_window(std::span<const double> window,
                                               const TestConfig& cfg = {},
                                               std::vector<StationarityVerdict>* verdicts = nullptr) {
    auto norm = normalize(window);
    if (!norm) return std::nullopt;
    auto comps = apply_transforms(*norm);
    auto pairs = build_pairs(comps);
    int passed = 0;
    for (const auto& p : pairs) {
        auto v = test_s(p, cfg);
        if (v.passed) ++passed;
        if (verdicts) verdicts->push_back(v);
    }
    return static_cast<double>(passed) / static_cast<double>(kPairCount);
}

/// Slides the N+1-point window over the CCR series; day i consumes
/// x(i-N .. i), so the first classifiable CCR index is N.
inline std::vector<LambdaPoint> lambda_series(std::span<const double> ccr, std::size_t window,
                                              const TestConfig& cfg = {}) {
    if (ccr.size() <= window) {
        throw ValidationError("CCR series of length " + std::to_string(ccr.size()) +
                              " too short for window " + std::to_string(window));
    }
    std::vector<LambdaPoint> out;
    out.reserve(ccr.size() - window);
    for (std::size_t i = window; i < ccr.size(); ++i) {
        auto raw = cut_window(ccr, i, window);
        auto lambda = lambda_for_window(raw, cfg);
        if (lambda) {
            out.push_back({i, *lambda, false});
        } else {
            out.push_back({i, std::numeric_limits<double>::quiet_NaN(), true});
        }
    }
    return out;
}

/// Pure threshold map: stationary iff lambda >= lambda1, non-stationary
/// iff lambda < lambda2, intermediate between, degenerate days
/// unclassifiable.
inline std::vector<Regime> classify(std::span<const LambdaPoint> lambdas, double lambda1,
                                    double lambda2) {
    if (!(lambda2 < lambda1) || lambda1 > 1.0) {
        throw ValidationError("thresholds must satisfy lambda2 < lambda1 <= 1");
    }
    std::vector<Regime> out;
    out.reserve(lambdas.size());
    for (const auto& p : lambdas) {
        if (p.degenerate) {
            out.push_back(Regime::Unclassifiable);
        } else if (p.lambda >= lambda1) {
            out.push_back(Regime::Stationary);
        } else if (p.lambda >= lambda2) {
            out.push_back(Regime::Intermediate);
        } else {
            out.push_back(Regime::NonStationary);
        }
    }
    return out;
}

/// Half-open index range [begin, end) into the lambda sequence.
struct LambdaSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const LambdaSpan&) const = default;
};

/// Conventional Test(ABN) baseline on lambdas computed at alpha = 1:
/// non-stationary spans are maximal runs of lambda == 0. A run starting
/// on the first classifiable day counts (no positive predecessor needed).
inline std::vector<LambdaSpan> abn_baseline(std::span<const LambdaPoint> lambdas) {
    std::vector<LambdaSpan> spans;
    std::size_t i = 0;
    while (i < lambdas.size()) {
        if (!lambdas[i].degenerate && lambdas[i].lambda == 0.0) {
            std::size_t j = i;
            while (j < lambdas.size() && !lambdas[j].degenerate && lambdas[j].lambda == 0.0) ++j;
            spans.push_back({i, j});
            i = j;
        } else {
            ++i;
        }
    }
    return spans;
}

/// Sample fourth standardized moment minus 3 (Gaussian reference 0).
inline double excess_kurtosis(std::span<const double> values) {
    if (values.size() < 4) throw ValidationError("kurtosis needs at least 4 values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) throw ValidationError("kurtosis undefined for constant data");
    return m4 / (m2 * m2) - 3.0;
}

/// Regime label per price-series day: day p uses the lambda whose window
/// ends at CCR index p-1; days before the first classifiable index are
/// unclassifiable.
inline std::vector<Regime> regimes_for_prices(std::size_t price_count,
                                              std::span<const LambdaPoint> lambdas,
                                              std::span<const Regime> labels) {
    std::vector<Regime> out(price_count, Regime::Unclassifiable);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const std::size_t p = lambdas[k].ccr_index + 1;
        if (p < price_count) out[p] = labels[k];
    }
    return out;
}

}  // namespace regimetrade
