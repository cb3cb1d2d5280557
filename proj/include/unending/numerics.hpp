#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace unending::numerics {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Entries below this are treated as exact zeros when banding kernels.
inline constexpr double kNegligible = 1e-300;

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/// Poisson(mean) pmf, truncated after the tail drops below kNegligible,
/// or at `max_len` entries. Computed outward from the mode so nothing
/// underflows before it has to.
inline std::vector<double> poisson_pmf(double mean, std::size_t max_len = std::numeric_limits<std::size_t>::max()) {
    if (mean <= 0.0) return {1.0};
    const auto mode = static_cast<std::size_t>(std::floor(mean));
    const double log_mode = static_cast<double>(mode) * std::log(mean) - mean - std::lgamma(static_cast<double>(mode) + 1.0);
    std::vector<double> up{std::exp(log_mode)};
    for (std::size_t k = mode; up.back() > kNegligible || k < mode + 2; ++k) {
        up.push_back(up.back() * mean / static_cast<double>(k + 1));
        if (mode + up.size() >= max_len) break;
    }
    std::vector<double> pmf(mode + up.size(), 0.0);
    std::copy(up.begin(), up.end(), pmf.begin() + static_cast<std::ptrdiff_t>(mode));
    for (std::size_t k = mode; k > 0; --k) pmf[k - 1] = pmf[k] * static_cast<double>(k) / mean;
    if (pmf.size() > max_len) pmf.resize(max_len);
    return pmf;
}

/// Upper tails: tail[j] = sum_{i > j} pmf[i]; summed from the small end.
inline std::vector<double> upper_tails(std::span<const double> pmf) {
    std::vector<double> tail(pmf.size(), 0.0);
    double acc = 0.0;
    for (std::size_t j = pmf.size(); j-- > 0;) {
        tail[j] = acc;
        acc += pmf[j];
    }
    return tail;
}

/// Row of the binomial(m, p) pmf restricted to the entries above kNegligible.
struct BinomialRow {
    std::size_t lo = 0;
    std::vector<double> pmf;
};

inline BinomialRow binomial_row(std::size_t m, double p) {
    if (m == 0 || p >= 1.0) return {m, {1.0}};
    if (p <= 0.0) return {0, {1.0}};
    const double q = 1.0 - p;
    const double md = static_cast<double>(m);
    auto mode = static_cast<std::size_t>(std::floor((md + 1.0) * p));
    mode = std::min(mode, m);
    const double kd = static_cast<double>(mode);
    const double log_mode = std::lgamma(md + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(md - kd + 1.0) +
                            kd * std::log(p) + (md - kd) * std::log1p(-p);
    const double ratio = p / q;
    std::vector<double> up{std::exp(log_mode)};
    for (std::size_t k = mode; k < m; ++k) {
        const double next = up.back() * static_cast<double>(m - k) / static_cast<double>(k + 1) * ratio;
        if (next < kNegligible) break;
        up.push_back(next);
    }
    std::vector<double> down;
    double cur = up.front();
    for (std::size_t k = mode; k > 0; --k) {
        cur = cur * static_cast<double>(k) / static_cast<double>(m - k + 1) / ratio;
        if (cur < kNegligible) break;
        down.push_back(cur);
    }
    BinomialRow row;
    row.lo = mode - down.size();
    row.pmf.assign(down.rbegin(), down.rend());
    row.pmf.insert(row.pmf.end(), up.begin(), up.end());
    return row;
}

/// Composite trapezoid rule over an arbitrary ascending grid.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

inline std::vector<double> uniform_grid(std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

/// True when consecutive spacings agree to `rel_tol` of the mean spacing.
inline bool is_uniform_grid(std::span<const double> x, double rel_tol = 1e-9) {
    if (x.size() < 2) return true;
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (std::abs((x[i] - x[i - 1]) - h) > rel_tol * std::abs(h)) return false;
    }
    return true;
}

/// Linear interpolation on an ascending grid, clamped at both ends.
inline double interpolate(std::span<const double> x, std::span<const double> y, double at) {
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), at);
    const auto i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double t = (at - x[i]) / (x[i + 1] - x[i]);
    return y[i] + t * (y[i + 1] - y[i]);
}

}  // namespace unending::numerics
