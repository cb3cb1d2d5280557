#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace unending {

/// Uniform values on [lo, hi].
struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

/// Pareto-type values with cdf 1 - 1/x and density 1/x^2 on [1, inf).
struct PowerLaw {};

/// Values given by a piecewise-linear inverse cdf through (g_i, v_i).
/// g runs strictly from 0 to 1, v is strictly increasing.
struct Tabulated {
    std::vector<double> g;
    std::vector<double> v;
};

/// Private-value law of a bidder. Immutable after construction.
class ValueDistribution {
public:
    using Kind = std::variant<Uniform, PowerLaw, Tabulated>;

    static constexpr double kDefaultGridCap = 0.9999;

    ValueDistribution() : kind_(Uniform{}) {}

    static ValueDistribution uniform(double lo = 0.0, double hi = 1.0) {
        if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
            throw InvalidArgument("uniform distribution needs 0 <= lo < hi < inf");
        }
        return ValueDistribution(Uniform{lo, hi});
    }

    static ValueDistribution power_law() { return ValueDistribution(PowerLaw{}); }

    static ValueDistribution tabulated(std::vector<double> g, std::vector<double> v) {
        if (g.size() != v.size() || g.size() < 2) {
            throw InvalidArgument("tabulated distribution needs at least two (g, value) rows");
        }
        if (g.front() != 0.0 || g.back() != 1.0) {
            throw InvalidArgument("tabulated percentiles must start at 0 and end at 1");
        }
        if (v.front() < 0.0) throw InvalidArgument("tabulated values must be non-negative");
        for (std::size_t i = 1; i < g.size(); ++i) {
            if (!(g[i] > g[i - 1])) throw InvalidArgument("tabulated percentiles must be strictly increasing");
            if (!(v[i] > v[i - 1])) throw InvalidArgument("tabulated values must be strictly increasing");
        }
        return ValueDistribution(Tabulated{std::move(g), std::move(v)});
    }

    /// Reads a two-column CSV `g,value` with a header row.
    static ValueDistribution from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open value table: " + path);
        std::string line;
        if (!std::getline(in, line)) throw InvalidArgument("value table is empty: " + path);
        std::vector<double> g, v;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream row(line);
            double a = 0.0, b = 0.0;
            if (!(row >> a >> b)) {
                throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected two numbers");
            }
            g.push_back(a);
            v.push_back(b);
        }
        return tabulated(std::move(g), std::move(v));
    }

    const Kind& kind() const { return kind_; }

    std::string name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) {
                    if (k.lo == 0.0 && k.hi == 1.0) return "uniform";
                    std::ostringstream os;
                    os.precision(17);
                    os << "uniform:" << k.lo << ":" << k.hi;
                    return os.str();
                } else if constexpr (std::is_same_v<K, PowerLaw>) {
                    return "powerlaw";
                } else {
                    return "table";
                }
            },
            kind_);
    }

    bool bounded() const { return !std::holds_alternative<PowerLaw>(kind_); }

    double support_infimum() const {
        return std::visit(
            [](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) return k.lo;
                else if constexpr (std::is_same_v<K, PowerLaw>) return 1.0;
                else return k.v.front();
            },
            kind_);
    }

    double support_supremum() const {
        return std::visit(
            [](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) return k.hi;
                else if constexpr (std::is_same_v<K, PowerLaw>) return std::numeric_limits<double>::infinity();
                else return k.v.back();
            },
            kind_);
    }

    double cdf(double x) const {
        return std::visit(
            [x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) {
                    if (x <= k.lo) return 0.0;
                    if (x >= k.hi) return 1.0;
                    return (x - k.lo) / (k.hi - k.lo);
                } else if constexpr (std::is_same_v<K, PowerLaw>) {
                    return x <= 1.0 ? 0.0 : 1.0 - 1.0 / x;
                } else {
                    if (x <= k.v.front()) return 0.0;
                    if (x >= k.v.back()) return 1.0;
                    auto it = std::upper_bound(k.v.begin(), k.v.end(), x);
                    const auto i = static_cast<std::size_t>(it - k.v.begin()) - 1;
                    const double t = (x - k.v[i]) / (k.v[i + 1] - k.v[i]);
                    return k.g[i] + t * (k.g[i + 1] - k.g[i]);
                }
            },
            kind_);
    }

    double pdf(double x) const {
        return std::visit(
            [x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) {
                    return (x < k.lo || x > k.hi) ? 0.0 : 1.0 / (k.hi - k.lo);
                } else if constexpr (std::is_same_v<K, PowerLaw>) {
                    return x < 1.0 ? 0.0 : 1.0 / (x * x);
                } else {
                    if (x < k.v.front() || x > k.v.back()) return 0.0;
                    auto it = std::upper_bound(k.v.begin(), k.v.end(), x);
                    std::size_t i = static_cast<std::size_t>(it - k.v.begin());
                    i = i == 0 ? 0 : std::min(i - 1, k.v.size() - 2);
                    return (k.g[i + 1] - k.g[i]) / (k.v[i + 1] - k.v[i]);
                }
            },
            kind_);
    }

    /// Inverse cdf. g = 1 is accepted only for bounded supports.
    double quantile(double g) const {
        if (!(g >= 0.0 && g <= 1.0)) throw InvalidArgument("quantile: percentile outside [0, 1]");
        return std::visit(
            [g](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) {
                    return g >= 1.0 ? k.hi : k.lo + g * (k.hi - k.lo);
                } else if constexpr (std::is_same_v<K, PowerLaw>) {
                    if (g >= 1.0) throw InvalidArgument("quantile: g = 1 is unbounded for the power law");
                    return 1.0 / (1.0 - g);
                } else {
                    if (g >= 1.0) return k.v.back();
                    auto it = std::upper_bound(k.g.begin(), k.g.end(), g);
                    const auto i = static_cast<std::size_t>(it - k.g.begin()) - 1;
                    const double t = (g - k.g[i]) / (k.g[i + 1] - k.g[i]);
                    return k.v[i] + t * (k.v[i + 1] - k.v[i]);
                }
            },
            kind_);
    }

    /// Largest percentile used when laying out value grids.
    double grid_cap() const { return bounded() ? 1.0 : grid_cap_; }

    ValueDistribution with_grid_cap(double cap) const {
        if (!(cap > 0.0 && cap < 1.0)) throw InvalidArgument("grid cap must lie in (0, 1)");
        ValueDistribution d = *this;
        d.grid_cap_ = cap;
        return d;
    }

private:
    explicit ValueDistribution(Kind k) : kind_(std::move(k)) {}

    Kind kind_;
    double grid_cap_ = kDefaultGridCap;
};

/// Parses "uniform", "uniform:a:b", "powerlaw" or "table:PATH".
inline ValueDistribution parse_distribution(const std::string& spec) {
    if (spec == "uniform") return ValueDistribution::uniform();
    if (spec == "powerlaw" || spec == "power-law") return ValueDistribution::power_law();
    if (spec.rfind("table:", 0) == 0) return ValueDistribution::from_csv(spec.substr(6));
    if (spec.rfind("uniform:", 0) == 0) {
        const auto rest = spec.substr(8);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw InvalidArgument("expected uniform:LO:HI, got " + spec);
        try {
            return ValueDistribution::uniform(std::stod(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
        } catch (const std::logic_error&) {
            throw InvalidArgument("expected uniform:LO:HI, got " + spec);
        }
    }
    throw InvalidArgument("unknown distribution '" + spec + "' (uniform, powerlaw, table:PATH)");
}

/// Value at percentile (lambda - mu) / lambda: the emergent posted price.
inline double threshold_value(const ValueDistribution& dist, double lambda, int mu = 1) {
    if (mu < 1) throw InvalidArgument("mu must be a positive integer");
    if (!(lambda > mu)) {
        throw ThresholdUndefined("threshold undefined for lambda <= mu; every bidder eventually wins for free");
    }
    return dist.quantile((lambda - mu) / lambda);
}

}  // namespace unending
