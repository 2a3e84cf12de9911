#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regimetrade/errors.hpp"
#include "regimetrade/transforms.hpp"

namespace regimetrade {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// Piece order for a series of length `len`: floor(3*sqrt(len)/d) - 1,
/// the reliable-lag rule of thumb applied to d-channel data.
inline int default_order(std::size_t len, int d = 2) {
    return static_cast<int>(std::floor(3.0 * std::sqrt(static_cast<double>(len)) / d)) - 1;
}

/// Lag budget for the flattened one-dimensional innovation series
/// (same rule with d = 1), clamped so every (n, m) statistic is evaluable.
inline int default_lag_budget(std::size_t xi_len) {
    int rule = static_cast<int>(std::floor(3.0 * std::sqrt(static_cast<double>(xi_len))));
    int cap = static_cast<int>((xi_len - 1) / 2);
    return std::max(1, std::min(rule, cap));
}

/// Componentwise standardization: center by sample mean, scale by sample
/// standard deviation (denominator = length). Zero variance in either
/// component makes the pair degenerate.
inline std::optional<std::vector<Vec2>> standardize(const PairSeries& pair) {
    const auto len = pair.size();
    if (len < 2) return std::nullopt;
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        mean_a += pair.a[k];
        mean_b += pair.b[k];
    }
    mean_a /= static_cast<double>(len);
    mean_b /= static_cast<double>(len);
    double var_a = 0.0, var_b = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        var_a += (pair.a[k] - mean_a) * (pair.a[k] - mean_a);
        var_b += (pair.b[k] - mean_b) * (pair.b[k] - mean_b);
    }
    var_a /= static_cast<double>(len);
    var_b /= static_cast<double>(len);
    if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
    const double sa = 1.0 / std::sqrt(var_a);
    const double sb = 1.0 / std::sqrt(var_b);
    std::vector<Vec2> z(len);
    for (std::size_t k = 0; k < len; ++k) {
        z[k] = Vec2((pair.a[k] - mean_a) * sa, (pair.b[k] - mean_b) * sb);
    }
    return z;
}

/// Sample covariance matrices R(n), n = 0..max_lag, of a standardized
/// series: R_ij(n) = (1/len) * sum_k z_i(k+n) z_j(k). R(-n) = R(n)^T.
struct CovSequence {
    std::vector<Mat2> r;        // index = lag
    std::size_t series_len = 0;

    int max_lag() const { return static_cast<int>(r.size()) - 1; }
};

inline CovSequence sample_covariance(std::span<const Vec2> z, int max_lag) {
    const auto len = z.size();
    if (max_lag < 0 || static_cast<std::size_t>(max_lag) + 2 > len) {
        throw ValidationError("covariance lag " + std::to_string(max_lag) +
                              " too large for series of length " + std::to_string(len));
    }
    CovSequence cov;
    cov.series_len = len;
    cov.r.resize(static_cast<std::size_t>(max_lag) + 1);
    for (int n = 0; n <= max_lag; ++n) {
        Mat2 acc = Mat2::Zero();
        for (std::size_t k = 0; k + static_cast<std::size_t>(n) < len; ++k) {
            acc += z[k + static_cast<std::size_t>(n)] * z[k].transpose();
        }
        cov.r[static_cast<std::size_t>(n)] = acc / static_cast<double>(len);
    }
    return cov;
}

namespace detail {

// Positive definite within tolerance: both eigenvalues of the symmetrized
// matrix exceed 1e-12 * trace.
inline bool positive_definite(const Mat2& m) {
    Mat2 s = 0.5 * (m + m.transpose());
    const double tr = s.trace();
    const double det = s.determinant();
    if (tr <= 0.0) return false;
    // eigenvalues of a symmetric 2x2
    const double mid = 0.5 * tr;
    const double disc = std::sqrt(std::max(0.0, mid * mid - det));
    const double lo = mid - disc;
    return lo > 1e-12 * tr;
}

}  // namespace detail

/// The KM2O-Langevin matrix system up to the given order: forward/backward
/// dissipation coefficients gamma(n, k) and prediction-error covariances
/// V(n). gamma_fwd[n][k] is the matrix applied to z(k) when the forward
/// innovation at step n is nu(n) = z(n) + sum_k gamma_fwd[n][k] z(k).
struct Km2oSystem {
    int order = 0;
    std::vector<std::vector<Mat2>> gamma_fwd;  // gamma_fwd[n] has n entries
    std::vector<std::vector<Mat2>> gamma_bwd;
    std::vector<Mat2> v_fwd;  // n = 0..order
    std::vector<Mat2> v_bwd;
    bool degenerate = false;
};

/// Multichannel Levinson recursion over the block-Toeplitz normal
/// equations. A singular or indefinite V at any order flags the system
/// degenerate instead of throwing; such a covariance structure cannot be
/// whitened and the caller treats it as a failed stationarity check.
inline Km2oSystem levinson(const CovSequence& cov, int order) {
    if (order < 1 || order > cov.max_lag()) {
        throw ValidationError("levinson order " + std::to_string(order) +
                              " out of range for covariance with max lag " +
                              std::to_string(cov.max_lag()));
    }
    Km2oSystem sys;
    sys.order = order;
    sys.gamma_fwd.resize(static_cast<std::size_t>(order) + 1);
    sys.gamma_bwd.resize(static_cast<std::size_t>(order) + 1);
    sys.v_fwd.resize(static_cast<std::size_t>(order) + 1);
    sys.v_bwd.resize(static_cast<std::size_t>(order) + 1);

    const Mat2 r0 = 0.5 * (cov.r[0] + cov.r[0].transpose());
    sys.v_fwd[0] = r0;
    sys.v_bwd[0] = r0;
    if (!detail::positive_definite(r0)) {
        sys.degenerate = true;
        return sys;
    }

    auto r = [&](int n) -> Mat2 {
        return n >= 0 ? cov.r[static_cast<std::size_t>(n)]
                      : Mat2(cov.r[static_cast<std::size_t>(-n)].transpose());
    };

    for (int n = 0; n < order; ++n) {
        const auto un = static_cast<std::size_t>(n);
        Mat2 num_f = r(n + 1);
        Mat2 num_b = r(-(n + 1));
        for (int k = 0; k < n; ++k) {
            num_f += sys.gamma_fwd[un][static_cast<std::size_t>(k)] * r(k + 1);
            num_b += sys.gamma_bwd[un][static_cast<std::size_t>(k)] * r(-(k + 1));
        }
        const Mat2 delta_f = -num_f * sys.v_bwd[un].inverse();
        const Mat2 delta_b = -num_b * sys.v_fwd[un].inverse();

        auto& gf = sys.gamma_fwd[un + 1];
        auto& gb = sys.gamma_bwd[un + 1];
        gf.resize(un + 1);
        gb.resize(un + 1);
        gf[0] = delta_f;
        gb[0] = delta_b;
        for (int k = 1; k <= n; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            gf[uk] = sys.gamma_fwd[un][uk - 1] + delta_f * sys.gamma_bwd[un][static_cast<std::size_t>(n - k)];
            gb[uk] = sys.gamma_bwd[un][uk - 1] + delta_b * sys.gamma_fwd[un][static_cast<std::size_t>(n - k)];
        }

        Mat2 vf = (Mat2::Identity() - delta_f * delta_b) * sys.v_fwd[un];
        Mat2 vb = (Mat2::Identity() - delta_b * delta_f) * sys.v_bwd[un];
        vf = 0.5 * (vf + vf.transpose());
        vb = 0.5 * (vb + vb.transpose());
        sys.v_fwd[un + 1] = vf;
        sys.v_bwd[un + 1] = vb;
        if (!detail::positive_definite(vf) || !detail::positive_definite(vb)) {
            sys.degenerate = true;
            return sys;
        }
    }
    return sys;
}

/// Lower-triangular W with W * W^T = V, via the closed 2x2 form.
/// Fails (nullopt) when V is not positive definite.
inline std::optional<Mat2> whitening_factor(const Mat2& v) {
    const double v11 = v(0, 0);
    const double det = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
    if (v11 <= 0.0 || det <= 0.0) return std::nullopt;
    const double w11 = std::sqrt(v11);
    Mat2 w;
    w << w11, 0.0,
         v(0, 1) / w11, std::sqrt(det) / w11;
    return w;
}

/// Whitened innovation pieces: for each start s, the forward innovations
/// nu(n) of the length-(order+1) piece are computed with the global
/// system, normalized by W(n)^-1 and flattened by interleaving the two
/// channels. Piece count = len - order.
struct WhitenedPieces {
    int order = 0;
    std::vector<std::vector<double>> xi;  // each of length 2*(order+1)
    bool degenerate = false;
};

inline WhitenedPieces extract_pieces(std::span<const Vec2> z, const Km2oSystem& sys) {
    WhitenedPieces out;
    out.order = sys.order;
    if (sys.degenerate) {
        out.degenerate = true;
        return out;
    }
    const int m = sys.order;
    const auto len = z.size();
    if (len < static_cast<std::size_t>(m) + 1) {
        throw ValidationError("series shorter than piece length");
    }

    // Precompute per-step whitening factors.
    std::vector<double> w11(static_cast<std::size_t>(m) + 1);
    std::vector<double> w21(static_cast<std::size_t>(m) + 1);
    std::vector<double> w22(static_cast<std::size_t>(m) + 1);
    for (int n = 0; n <= m; ++n) {
        auto w = whitening_factor(sys.v_fwd[static_cast<std::size_t>(n)]);
        if (!w) {
            out.degenerate = true;
            return out;
        }
        w11[static_cast<std::size_t>(n)] = (*w)(0, 0);
        w21[static_cast<std::size_t>(n)] = (*w)(1, 0);
        w22[static_cast<std::size_t>(n)] = (*w)(1, 1);
    }

    const std::size_t pieces = len - static_cast<std::size_t>(m);
    out.xi.resize(pieces);
    for (std::size_t s = 0; s < pieces; ++s) {
        auto& xi = out.xi[s];
        xi.resize(2 * (static_cast<std::size_t>(m) + 1));
        for (int n = 0; n <= m; ++n) {
            Vec2 nu = z[s + static_cast<std::size_t>(n)];
            const auto& g = sys.gamma_fwd[static_cast<std::size_t>(n)];
            for (int k = 0; k < n; ++k) {
                nu += g[static_cast<std::size_t>(k)] * z[s + static_cast<std::size_t>(k)];
            }
            const auto un = static_cast<std::size_t>(n);
            const double xi1 = nu(0) / w11[un];
            const double xi2 = (nu(1) - w21[un] * xi1) / w22[un];
            xi[2 * un] = xi1;
            xi[2 * un + 1] = xi2;
        }
    }
    return out;
}

/// Mean criterion: sqrt(len) * |sample mean| < 1.96.
inline bool criterion_mean(std::span<const double> xi) {
    double mean = 0.0;
    for (double v : xi) mean += v;
    mean /= static_cast<double>(xi.size());
    return std::sqrt(static_cast<double>(xi.size())) * std::abs(mean) < 1.96;
}

/// Variance criterion: the studentized statistic
/// sum(xi^2 - 1) / sqrt(sum((xi^2 - 1)^2)) must be inside (-2.2414, 2.2414).
/// A zero denominator (every xi^2 exactly 1) counts as a pass.
inline bool criterion_variance(std::span<const double> xi) {
    double num = 0.0, den = 0.0;
    for (double v : xi) {
        const double d = v * v - 1.0;
        num += d;
        den += d * d;
    }
    if (den <= 0.0) return true;
    return std::abs(num / std::sqrt(den)) < 2.2414;
}

enum class OrthMode { Sum, Literal };

/// Effective sample counts L1, L2 for the lag-n, shift-m pseudo-covariance
/// of a length-`len` series, per the four-branch block-count definition.
inline std::pair<long, long> orth_block_counts(std::size_t len, int n, int m) {
    const long len1 = static_cast<long>(len) - 1;
    const long q = len1 / (2 * n);
    const long r = len1 % (2 * n);
    const long u = m / (2 * n);
    const long t = m % (2 * n);
    long l1, l2;
    if (r <= n) {
        if (t <= n - 1) {
            l1 = n * (q + u) - m;
            l2 = n * (q - u - 1) + r + 1;
        } else {
            l1 = n * (q - u - 1);
            l2 = n * (q + u) + r + 1 - m;
        }
    } else {
        if (t <= n - 1) {
            l1 = n * (q + u - 1) + r + 1 - m;
            l2 = n * (q - u);
        } else {
            l1 = n * (q - u - 2) + r + 1;
            l2 = n * (q + u + 1) - m;
        }
    }
    return {std::max(0L, l1), std::max(0L, l2)};
}

/// Precomputed per-(n, m) acceptance bounds for the orthogonality
/// criterion. The raw statistic is len * |R(n,m)| / D with
/// R(n,m) = (1/len) * sum_{k=m}^{len-1-n} xi(k) xi(k+n), so each pair is
/// satisfied when the plain sum stays below 1.96 * D.
struct OrthTable {
    struct Entry {
        int n;
        int m;
        double bound;    // 1.96 * D
        bool excluded;   // D too small to studentize (literal mode)
    };
    std::vector<Entry> entries;

    OrthTable(std::size_t len, int lag_budget, OrthMode mode) {
        if (lag_budget < 1 || 2 * static_cast<std::size_t>(lag_budget) >= len) {
            throw ValidationError("orthogonality lag budget " + std::to_string(lag_budget) +
                                  " invalid for series of length " + std::to_string(len));
        }
        for (int n = 1; n <= lag_budget; ++n) {
            for (int m = 0; m + n <= lag_budget; ++m) {
                auto [l1, l2] = orth_block_counts(len, n, m);
                const double d = mode == OrthMode::Sum
                                     ? std::sqrt(static_cast<double>(l1)) + std::sqrt(static_cast<double>(l2))
                                     : std::abs(std::sqrt(static_cast<double>(l1)) -
                                                std::sqrt(static_cast<double>(l2)));
                entries.push_back({n, m, 1.96 * d, d < 1e-9});
            }
        }
    }
};

/// Orthogonality criterion: more than 90% of the (n, m) pseudo-covariance
/// statistics must stay below their bound. Excluded entries leave the
/// denominator; an all-excluded table passes vacuously.
inline bool criterion_orthogonality(std::span<const double> xi, const OrthTable& table) {
    const auto len = xi.size();
    std::size_t satisfied = 0, considered = 0;
    int cur_n = 0;
    double sum = 0.0;
    int cur_m = -1;
    for (const auto& e : table.entries) {
        if (e.n != cur_n) {
            cur_n = e.n;
            cur_m = 0;
            sum = 0.0;
            for (std::size_t k = 0; k + static_cast<std::size_t>(cur_n) < len; ++k) {
                sum += xi[k] * xi[k + static_cast<std::size_t>(cur_n)];
            }
        }
        while (cur_m < e.m) {
            sum -= xi[static_cast<std::size_t>(cur_m)] *
                   xi[static_cast<std::size_t>(cur_m + cur_n)];
            ++cur_m;
        }
        if (e.excluded) continue;
        ++considered;
        if (std::abs(sum) < e.bound) ++satisfied;
    }
    if (considered == 0) return true;
    return static_cast<double>(satisfied) / static_cast<double>(considered) > 0.90;
}

inline bool criterion_orthogonality(std::span<const double> xi, int lag_budget,
                                    OrthMode mode = OrthMode::Sum) {
    return criterion_orthogonality(xi, OrthTable(xi.size(), lag_budget, mode));
}

struct TestConfig {
    double alpha = 0.5;              // Test(S)' relaxation in (0, 1]
    OrthMode orth_mode = OrthMode::Sum;
    int lag_budget = 0;              // 0 = rule of thumb
};

struct StationarityVerdict {
    double rate_mean = 0.0;
    double rate_var = 0.0;
    double rate_orth = 0.0;
    bool passed = false;
    bool degenerate = false;
};

/// Test(S)' pass thresholds: 0.80 / 0.70 / 0.80 scaled by alpha.
inline bool verdict_from_rates(double rate_mean, double rate_var, double rate_orth,
                               double alpha) {
    return rate_mean > 0.80 * alpha && rate_var > 0.70 * alpha && rate_orth > 0.80 * alpha;
}

/// Runs Test(S)' on one pair: system from the whole interval, criteria on
/// every whitened piece. Degenerate covariance or system yields a failed,
/// degenerate verdict (never throws for that).
inline StationarityVerdict test_s(const PairSeries& pair, const TestConfig& cfg = {}) {
    if (cfg.alpha <= 0.0 || cfg.alpha > 1.0) {
        throw ValidationError("alpha must be in (0, 1]");
    }
    StationarityVerdict verdict;
    const auto len = pair.size();
    const int m = default_order(len);
    if (m < 1 || len < static_cast<std::size_t>(2 * m + 4)) {
        throw ValidationError("pair too short for Test(S): length " + std::to_string(len));
    }
    auto z = standardize(pair);
    if (!z) {
        verdict.degenerate = true;
        return verdict;
    }
    auto cov = sample_covariance(*z, m);
    auto sys = levinson(cov, m);
    auto pieces = extract_pieces(*z, sys);
    if (pieces.degenerate) {
        verdict.degenerate = true;
        return verdict;
    }

    const std::size_t xi_len = 2 * (static_cast<std::size_t>(m) + 1);
    const int lag = cfg.lag_budget > 0 ? cfg.lag_budget : default_lag_budget(xi_len);
    OrthTable table(xi_len, lag, cfg.orth_mode);

    std::size_t pass_mean = 0, pass_var = 0, pass_orth = 0;
    for (const auto& xi : pieces.xi) {
        if (criterion_mean(xi)) ++pass_mean;
        if (criterion_variance(xi)) ++pass_var;
        if (criterion_orthogonality(xi, table)) ++pass_orth;
    }
    const double count = static_cast<double>(pieces.xi.size());
    verdict.rate_mean = static_cast<double>(pass_mean) / count;
    verdict.rate_var = static_cast<double>(pass_var) / count;
    verdict.rate_orth = static_cast<double>(pass_orth) / count;
    verdict.passed = verdict_from_rates(verdict.rate_mean, verdict.rate_var,
                                        verdict.rate_orth, cfg.alpha);
    return verdict;
}

}  // namespace regimetrade
