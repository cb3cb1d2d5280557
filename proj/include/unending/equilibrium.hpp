#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "values.hpp"
#include "winner.hpp"

namespace unending {

/// W below this is treated as underflowed; bids there come from log H.
inline constexpr double kUnderflowW = 1e-290;

/// Equilibrium bid b(x) and bidder expectation Z(x) on a value grid, with
/// the winner quantities they were built from.
struct BidCurve {
    double lambda = 0.0;
    double delta = 0.0;
    int mu = 1;
    ValueDistribution dist;
    std::vector<double> x;
    std::vector<double> g;
    std::vector<double> b;
    std::vector<double> Z;
    std::vector<double> W;
    std::vector<double> H;
    std::vector<char> underflow;
    double ode_residual_max = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const { return x.size(); }

    /// b at an arbitrary value, linear in percentile between grid nodes.
    double bid_at(double value) const { return numerics::interpolate(g, b, dist.cdf(value)); }
};

/// Posted-price bidding with no uncertainty: min(x, X_(lambda/mu)).
inline double bid_zero_uncertainty(const ValueDistribution& dist, double lambda, int mu, double x) {
    const double t = threshold_value(dist, lambda, mu);
    return x < t ? x : t;
}

namespace detail {

/// Indices of the curve that map to finite values of `dist`.
inline std::size_t value_grid_points(const WinnerCurve& curve, const ValueDistribution& dist) {
    const double cap = dist.grid_cap();
    std::size_t n = 0;
    while (n < curve.size() && curve.g[n] <= cap) ++n;
    if (!dist.bounded()) {
        while (n > 0 && curve.g[n - 1] >= 1.0) --n;
    }
    return n;
}

}  // namespace detail

/// Bids with no uncertainty laid out on the curve's percentile grid; W and H
/// come from the closed forms.
inline BidCurve bid_curve_zero_uncertainty(const ValueDistribution& dist, double lambda, int mu, const std::vector<double>& g_grid) {
    const double t = threshold_value(dist, lambda, mu);
    BidCurve c;
    c.lambda = lambda;
    c.delta = 0.0;
    c.mu = mu;
    c.dist = dist;
    for (double g : g_grid) {
        if (g > dist.grid_cap() || (!dist.bounded() && g >= 1.0)) break;
        const double x = dist.quantile(g);
        const double W = winner_cdf_closed_zero(lambda, mu, g);
        const double H = W > 0.0 ? 1.0 : 0.0;
        const double b = x < t ? x : t;
        c.x.push_back(x);
        c.g.push_back(g);
        c.b.push_back(b);
        c.W.push_back(W);
        c.H.push_back(H);
        c.Z.push_back((x - b) * H);
        c.underflow.push_back(0);
    }
    return c;
}

struct BidOptions {
    /// Allows mu > 1 with delta > 0, reusing the single-winner formula on the
    /// multi-winner W. No independent correctness criterion exists for it.
    bool experimental_mu = false;
};

/// Equilibrium bidding with uncertainty, on the curve's own percentile grid.
///
/// With c = (1 - delta) / delta, H = W / (delta (1 + c W)) and
/// dH = w / (delta (1 + c W)^2) dg, so the bidding integral is
///     b(G) = [ X_ H(0) + integral_0^G F^-1(g) dH(g) ] / H(G),
/// where X_ is the support infimum (b(X_) = X_; zero for a support that
/// starts at 0). Each cell is integrated exactly with F^-1 linear and log H
/// linear in g; with u = log(H_{i+1} / H_i) and r = e^-u,
///     b_{i+1} = r b_i + (1 - r) x_i + (x_{i+1} - x_i) (1 - (1 - r) / u).
/// This is the trapezoid rule when u is small. Working from log H keeps the
/// region where W underflows on the same footing, and it stays accurate
/// where log W is steep and b hugs x.
inline BidCurve bid_with_uncertainty(const ValueDistribution& dist, const WinnerCurve& curve, const BidOptions& opt = {}) {
    if (!(curve.delta > 0.0)) throw InvalidArgument("bid_with_uncertainty needs delta > 0; use bid_curve_zero_uncertainty");
    if (curve.mu != 1 && !opt.experimental_mu) {
        throw InvalidArgument("bidding with mu > 1 and delta > 0 is experimental; enable it explicitly");
    }
    if (!curve.has_success()) throw InvalidArgument("winner curve has no success probabilities");
    if (curve.g.front() != 0.0) throw InvalidArgument("winner curve grid must start at percentile 0");
    const std::size_t n = detail::value_grid_points(curve, dist);
    if (n < 2) throw GridTooCoarse("value grid has fewer than two points");

    BidCurve c;
    c.lambda = curve.lambda;
    c.delta = curve.delta;
    c.mu = curve.mu;
    c.dist = dist;
    c.x.resize(n);
    c.g.assign(curve.g.begin(), curve.g.begin() + static_cast<std::ptrdiff_t>(n));
    c.W.assign(curve.W.begin(), curve.W.begin() + static_cast<std::ptrdiff_t>(n));
    c.H.assign(curve.H.begin(), curve.H.begin() + static_cast<std::ptrdiff_t>(n));
    c.b.resize(n);
    c.Z.resize(n);
    c.underflow.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.x[i] = dist.quantile(c.g[i]);
        c.underflow[i] = curve.W[i] < kUnderflowW ? 1 : 0;
    }
    c.b[0] = c.x[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double lo = curve.log_H[i];
        const double hi = curve.log_H[i + 1];
        const double dx = c.x[i + 1] - c.x[i];
        double next = c.x[i + 1];
        if (hi != numerics::kNegInf && lo != numerics::kNegInf) {
            const double u = std::max(0.0, hi - lo);
            const double r = std::exp(-u);
            const double one_minus_r = -std::expm1(-u);
            // 1 - (1 - r) / u, by series where it cancels.
            const double lift = u < 1e-4 ? u * (0.5 - u / 6.0) : 1.0 - one_minus_r / u;
            next = r * c.b[i] + one_minus_r * c.x[i] + dx * lift;
        } else if (hi == numerics::kNegInf) {
            next = c.b[i];
        }
        c.b[i + 1] = std::clamp(next, 0.0, c.x[i + 1]);
    }
    for (std::size_t i = 0; i < n; ++i) c.Z[i] = (c.x[i] - c.b[i]) * c.H[i];
    return c;
}

/// Z(x) = (x - b(x)) H(F(x)); recomputed in place.
inline BidCurve& expectation(BidCurve& bid) {
    for (std::size_t i = 0; i < bid.size(); ++i) bid.Z[i] = (bid.x[i] - bid.b[i]) * bid.H[i];
    return bid;
}

/// Values of `bid` sampled at arbitrary x (linear in percentile).
inline BidCurve resample(const BidCurve& bid, const std::vector<double>& x_grid) {
    BidCurve out = bid;
    out.x = x_grid;
    const std::size_t n = x_grid.size();
    out.g.resize(n);
    out.b.resize(n);
    out.Z.resize(n);
    out.W.resize(n);
    out.H.resize(n);
    out.underflow.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = bid.dist.cdf(x_grid[i]);
        out.g[i] = g;
        out.b[i] = std::min(numerics::interpolate(bid.g, bid.b, g), x_grid[i]);
        out.W[i] = numerics::interpolate(bid.g, bid.W, g);
        out.H[i] = numerics::interpolate(bid.g, bid.H, g);
        out.Z[i] = (x_grid[i] - out.b[i]) * out.H[i];
    }
    return out;
}

struct OdeResidualReport {
    /// Per grid point; NaN where the point was skipped (ends, x - b < 1e-9).
    std::vector<double> residual;
    double max = 0.0;
    std::size_t evaluated = 0;

    double fraction_below(double threshold) const {
        if (evaluated == 0) return 1.0;
        std::size_t ok = 0;
        for (double r : residual) {
            if (!std::isnan(r) && r < threshold) ++ok;
        }
        return static_cast<double>(ok) / static_cast<double>(evaluated);
    }
};

/// Normalized mismatch of the bidding ODE
///     b'(x) / (x - b) = w f / ((1 + c W) W)
/// at interior points. Both sides are divided by f(x), so b' is the
/// central difference in percentile. w / W is taken as the central
/// difference of log W: the ratio of differences of W is off by
/// sinh(k h) / (k h) where log W is steep, and log W stays finite where W
/// underflows. Stores the maximum in the bid curve.
inline OdeResidualReport ode_residual(BidCurve& bid, const WinnerCurve& curve) {
    const std::size_t n = bid.size();
    if (n < kMinDensityGridPoints) throw GridTooCoarse("ODE residual needs at least 257 grid points");
    if (!curve.has_density()) throw InvalidArgument("winner curve has no density");
    if (n > curve.size()) throw InvalidArgument("bid curve is longer than its winner curve");
    const double delta = bid.delta;
    const double c = delta > 0.0 ? (1.0 - delta) / delta : 0.0;
    OdeResidualReport rep;
    rep.residual.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double gap = bid.x[i] - bid.b[i];
        if (gap < 1e-9) continue;
        const double dg = curve.g[i + 1] - curve.g[i - 1];
        const double lhs = (bid.b[i + 1] - bid.b[i - 1]) / dg / gap;
        const double W = curve.W[i];
        double w_over_W = (curve.log_W[i + 1] - curve.log_W[i - 1]) / dg;
        if (!std::isfinite(w_over_W)) {
            if (!(W > 0.0)) continue;
            w_over_W = curve.w[i] / W;
        }
        const double rhs = w_over_W / (1.0 + c * W);
        double r = 0.0;
        if (rhs != 0.0) r = std::abs(lhs - rhs) / std::abs(rhs);
        else if (lhs != 0.0) r = std::numeric_limits<double>::infinity();
        rep.residual[i] = r;
        rep.max = std::max(rep.max, r);
        ++rep.evaluated;
    }
    bid.ode_residual_max = rep.max;
    return rep;
}

/// Expected value of a type-x bidder who bids like type y for one round
/// and then returns to b(x). Arguments are grid indices.
inline double one_shot_deviation_value(const BidCurve& bid, std::size_t xi, std::size_t yi) {
    const double x = bid.x[xi];
    const double Wy = bid.W[yi];
    return Wy * (x - bid.b[yi]) + (1.0 - bid.delta) * (1.0 - Wy) * bid.H[xi] * (x - bid.b[xi]);
}

/// Same, at arbitrary values (interpolated in percentile).
inline double one_shot_deviation_value(const BidCurve& bid, double x, double y) {
    const double gx = bid.dist.cdf(x);
    const double gy = bid.dist.cdf(y);
    const double Wy = numerics::interpolate(bid.g, bid.W, gy);
    const double by = numerics::interpolate(bid.g, bid.b, gy);
    const double bx = numerics::interpolate(bid.g, bid.b, gx);
    const double Hx = numerics::interpolate(bid.g, bid.H, gx);
    return Wy * (x - by) + (1.0 - bid.delta) * (1.0 - Wy) * Hx * (x - bx);
}

struct DeviationResult {
    double x = 0.0;
    double y_star = 0.0;
    double argmax_gap = 0.0;
    double value_gap = 0.0;
    double Z = 0.0;
    bool pass = false;
};

struct DeviationReport {
    std::vector<DeviationResult> samples;
    double relative_tol = 1e-4;
    bool pass() const {
        return std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.pass; });
    }
};

/// Scans every grid y for the best one-round deviation of each sampled
/// type (snapped to the nearest interior node). Passes when the gain over
/// bidding b(x) is below relative_tol * max(Z(x), 1e-6).
inline DeviationReport best_response_check(const BidCurve& bid, const std::vector<double>& x_samples, double relative_tol = 1e-4) {
    const std::size_t n = bid.size();
    if (n < 3) throw GridTooCoarse("deviation scan needs at least three grid points");
    DeviationReport rep;
    rep.relative_tol = relative_tol;
    for (double xs : x_samples) {
        auto it = std::lower_bound(bid.x.begin(), bid.x.end(), xs);
        std::size_t i = static_cast<std::size_t>(it - bid.x.begin());
        if (i == n || (i > 0 && std::abs(bid.x[i - 1] - xs) <= std::abs(bid.x[i] - xs))) --i;
        if (i == 0 || i + 1 >= n) throw InvalidArgument("deviation sample must lie strictly inside the value grid");
        const double base = one_shot_deviation_value(bid, i, i);
        std::size_t best = i;
        double best_v = base;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = one_shot_deviation_value(bid, i, j);
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        DeviationResult r;
        r.x = bid.x[i];
        r.y_star = bid.x[best];
        r.argmax_gap = std::abs(r.y_star - r.x);
        r.value_gap = best_v - base;
        r.Z = bid.Z[i];
        r.pass = r.value_gap < relative_tol * std::max(r.Z, 1e-6);
        rep.samples.push_back(r);
    }
    return rep;
}

struct ComparativesEntry {
    double delta = 0.0;
    BidCurve bid;
    /// x maximizing b(x|0) - b(x|delta) over the whole grid.
    double gap_argmax_x = 0.0;
    double gap_max = 0.0;
};

struct ComparativesReport {
    double threshold = 0.0;
    double grid_step = 0.0;
    BidCurve baseline;
    std::vector<ComparativesEntry> entries;
    bool bids_below_baseline = true;
    bool expectation_nonnegative = true;
    bool expectation_above_baseline = true;
    bool bids_nonincreasing_in_delta = true;
    /// Largest grid x such that every check holds at all grid points <= x.
    double x_star = 0.0;
    std::string first_violation;

    bool pass() const {
        return bids_below_baseline && expectation_nonnegative && expectation_above_baseline && bids_nonincreasing_in_delta;
    }
};

/// Compares bids and expectations under each delta against the
/// zero-uncertainty posted price, on a uniform percentile grid.
inline ComparativesReport uncertainty_comparatives(const ValueDistribution& dist, double lambda, const std::vector<double>& deltas,
                                                   std::size_t points = kDefaultGridPoints, double tol = 1e-6) {
    if (!std::is_sorted(deltas.begin(), deltas.end())) throw InvalidArgument("deltas must be sorted ascending");
    ComparativesReport rep;
    rep.threshold = threshold_value(dist, lambda, 1);
    const auto g = numerics::uniform_grid(points);
    rep.baseline = bid_curve_zero_uncertainty(dist, lambda, 1, g);
    const auto& base = rep.baseline;
    const std::size_t n = base.size();
    rep.grid_step = n > 1 ? base.x[1] - base.x[0] : 0.0;

    for (double d : deltas) {
        if (d == 0.0) continue;
        if (!(d > 0.0 && d <= 1.0)) throw InvalidArgument("deltas must lie in [0, 1]");
        ComparativesEntry e;
        e.delta = d;
        e.bid = bid_with_uncertainty(dist, build_winner_curve(lambda, d, 1, points));
        e.gap_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < std::min(n, e.bid.size()); ++i) {
            const double gap = base.b[i] - e.bid.b[i];
            if (gap > e.gap_max) {
                e.gap_max = gap;
                e.gap_argmax_x = base.x[i];
            }
        }
        rep.entries.push_back(std::move(e));
    }

    const double x_limit = rep.threshold * (1.0 + 1e-12);
    bool prefix_ok = true;
    rep.x_star = n > 0 ? base.x.front() : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = true;
        std::string why;
        for (std::size_t k = 0; k < rep.entries.size(); ++k) {
            const auto& e = rep.entries[k];
            if (i >= e.bid.size()) continue;
            const double b = e.bid.b[i];
            const double z = e.bid.Z[i];
            const double prev_b = k == 0 ? base.b[i] : rep.entries[k - 1].bid.b[i];
            if (b > base.b[i] + tol) {
                ok = false;
                if (base.x[i] <= x_limit && rep.bids_below_baseline) {
                    rep.bids_below_baseline = false;
                    why = "b(x|delta) above posted-price bid";
                }
            }
            if (z < -1e-9) {
                ok = false;
                if (base.x[i] <= x_limit && rep.expectation_nonnegative) {
                    rep.expectation_nonnegative = false;
                    why = "negative expectation";
                }
            }
            if (z < base.Z[i] - tol) {
                ok = false;
                if (base.x[i] <= x_limit && rep.expectation_above_baseline) {
                    rep.expectation_above_baseline = false;
                    why = "expectation below zero-uncertainty expectation";
                }
            }
            if (b > prev_b + tol) {
                ok = false;
                if (base.x[i] <= x_limit && rep.bids_nonincreasing_in_delta) {
                    rep.bids_nonincreasing_in_delta = false;
                    why = "bid increases with delta";
                }
            }
            if (!why.empty() && rep.first_violation.empty()) {
                rep.first_violation = why + " at x=" + std::to_string(base.x[i]) + ", delta=" + std::to_string(e.delta);
            }
        }
        if (prefix_ok && ok) rep.x_star = base.x[i];
        prefix_ok = prefix_ok && ok;
    }
    return rep;
}

}  // namespace unending
