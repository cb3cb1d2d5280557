#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

#include "chain.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace unending {

/// Stationary winner distribution over the percentile axis.
///
/// W(g) is the probability that a round's winner sits at percentile <= g,
/// w(g) its density and H(g) the probability that a percentile-g bidder
/// wins before being removed. All three depend on (lambda, delta, mu) only,
/// never on the value distribution.
struct WinnerCurve {
    double lambda = 0.0;
    double delta = 0.0;
    int mu = 1;
    std::vector<double> g;
    std::vector<double> W;
    std::vector<double> log_W;
    std::vector<double> w;
    std::vector<double> H;
    std::vector<double> log_H;
    /// Largest negative density value removed by clipping.
    double max_clip = 0.0;

    std::size_t size() const { return g.size(); }
    bool has_density() const { return w.size() == g.size(); }
    bool has_success() const { return H.size() == g.size(); }
};

enum class WinnerMethod {
    /// Closed form for delta = 0, orbit series for mu = 1, power iteration otherwise.
    Automatic,
    /// Power iteration at every grid point.
    Solver,
};

struct WinnerOptions {
    WinnerMethod method = WinnerMethod::Automatic;
    SolveOptions solve{};
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

inline constexpr std::size_t kDefaultGridPoints = 1025;
inline constexpr std::size_t kMinDensityGridPoints = 257;

/// Winner cdf with no uncertainty. Winners above g arrive at rate
/// lambda (1 - g) and all of them eventually win, so the fraction of the
/// mu winners per round that lie above g is lambda (1 - g) / mu.
inline double winner_cdf_closed_zero(double lambda, int mu, double g) {
    if (mu < 1) throw InvalidArgument("mu must be >= 1");
    if (g >= 1.0) return 1.0;
    return std::max(0.0, 1.0 - lambda * (1.0 - g) / mu);
}

/// Fraction of a round's mu winners that come from at or below the
/// sub-pool's percentile: sum_{j<mu} (1 - j/mu) p_j.
inline double winner_fraction_from_pool(const PoolDistribution& p, int mu) {
    if (mu == 1) return p.p0();
    double acc = 0.0;
    for (int j = 0; j < mu && static_cast<std::size_t>(j) < p.probs.size(); ++j) {
        acc += (1.0 - static_cast<double>(j) / mu) * p.probs[static_cast<std::size_t>(j)];
    }
    return acc;
}

namespace detail {

inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline void check_percentile_grid(const std::vector<double>& g) {
    if (g.empty()) throw InvalidArgument("percentile grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] >= 0.0 && g[i] <= 1.0)) throw InvalidArgument("percentile grid must lie in [0, 1]");
        if (i > 0 && !(g[i] > g[i - 1])) throw InvalidArgument("percentile grid must be strictly ascending");
    }
}

}  // namespace detail

/// W(g) = p0 (mu = 1) or the multi-winner fraction of the sub-pool chain
/// with arrival mean lambda (1 - g). Only W and log_W are filled.
inline WinnerCurve winner_cdf(double lambda, double delta, int mu, const std::vector<double>& g_grid,
                              const WinnerOptions& opt = {}) {
    ChainParams{lambda, delta, mu}.validate();
    detail::check_percentile_grid(g_grid);
    WinnerCurve c;
    c.lambda = lambda;
    c.delta = delta;
    c.mu = mu;
    c.g = g_grid;
    const std::size_t n = g_grid.size();
    c.W.assign(n, 0.0);
    c.log_W.assign(n, numerics::kNegInf);

    const bool solver = opt.method == WinnerMethod::Solver || (delta > 0.0 && mu > 1);
    if (!solver && delta == 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            c.W[i] = winner_cdf_closed_zero(lambda, mu, g_grid[i]);
            c.log_W[i] = c.W[i] > 0.0 ? std::log(c.W[i]) : numerics::kNegInf;
        }
        return c;
    }
    if (!solver) {
        detail::parallel_for(n, opt.threads, [&](std::size_t i) {
            const double lam = g_grid[i] >= 1.0 ? 0.0 : lambda * (1.0 - g_grid[i]);
            c.log_W[i] = empty_pool_log_probability(lam, delta);
            c.W[i] = std::exp(c.log_W[i]);
        });
        return c;
    }
    detail::parallel_for(n, opt.threads, [&](std::size_t i) {
        const double lam = g_grid[i] >= 1.0 ? 0.0 : lambda * (1.0 - g_grid[i]);
        const auto p = solve_stationary({lam, delta, mu}, opt.solve);
        if (mu == 1) {
            c.log_W[i] = p.log_p0;
            c.W[i] = p.p0();
        } else {
            c.W[i] = winner_fraction_from_pool(p, mu);
            c.log_W[i] = c.W[i] > 0.0 ? std::log(c.W[i]) : numerics::kNegInf;
        }
    });
    return c;
}

/// Fills w by central differences (one-sided at the ends) on a uniform
/// grid of at least 257 points. Negative values are clipped, not
/// renormalized; the largest clip is kept in max_clip.
inline WinnerCurve winner_density(WinnerCurve curve) {
    const std::size_t n = curve.size();
    if (n < kMinDensityGridPoints) {
        throw GridTooCoarse("winner density needs at least " + std::to_string(kMinDensityGridPoints) + " grid points, got " +
                            std::to_string(n));
    }
    if (!numerics::is_uniform_grid(curve.g)) throw InvalidArgument("winner density needs a uniform percentile grid");
    const auto& g = curve.g;
    const auto& W = curve.W;
    curve.w.assign(n, 0.0);
    curve.max_clip = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        if (i == 0) d = (W[1] - W[0]) / (g[1] - g[0]);
        else if (i + 1 == n) d = (W[n - 1] - W[n - 2]) / (g[n - 1] - g[n - 2]);
        else d = (W[i + 1] - W[i - 1]) / (g[i + 1] - g[i - 1]);
        if (d < 0.0) {
            curve.max_clip = std::max(curve.max_clip, -d);
            d = 0.0;
        }
        curve.w[i] = d;
    }
    return curve;
}

/// H = W / (delta + (1 - delta) W), evaluated through log W so it stays
/// meaningful where W underflows. Rounds count as independent trials won
/// with probability W; simulated bidders near the threshold win less often.
inline WinnerCurve success_probability(WinnerCurve curve) {
    const std::size_t n = curve.size();
    const double delta = curve.delta;
    curve.H.assign(n, 0.0);
    curve.log_H.assign(n, numerics::kNegInf);
    for (std::size_t i = 0; i < n; ++i) {
        const double lw = curve.log_W[i];
        if (lw == numerics::kNegInf) continue;
        if (delta == 0.0) {
            curve.H[i] = 1.0;
            curve.log_H[i] = 0.0;
            continue;
        }
        const double W = curve.W[i];
        curve.log_H[i] = lw - std::log(delta + (1.0 - delta) * W);
        curve.H[i] = std::min(1.0, std::exp(curve.log_H[i]));
    }
    return curve;
}

/// cdf, density and success probability on a uniform grid.
inline WinnerCurve build_winner_curve(double lambda, double delta, int mu = 1, std::size_t points = kDefaultGridPoints,
                                      const WinnerOptions& opt = {}) {
    return success_probability(winner_density(winner_cdf(lambda, delta, mu, numerics::uniform_grid(points), opt)));
}

/// |trapezoid(w) - (W(1) - W(0))|: a convergence diagnostic for w.
inline double density_integral_defect(const WinnerCurve& c) {
    if (!c.has_density()) throw InvalidArgument("density not computed");
    return std::abs(numerics::trapezoid(c.g, c.w) - (c.W.back() - c.W.front()));
}

}  // namespace unending
