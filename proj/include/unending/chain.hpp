#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "values.hpp"

namespace unending {

/// One bidder-pool Markov chain: Poisson(lambda_star) arrivals per round,
/// removal probability delta for each survivor, mu winners per round.
struct ChainParams {
    double lambda_star = 0.0;
    double delta = 0.0;
    int mu = 1;

    void validate() const {
        if (!(lambda_star >= 0.0) || !std::isfinite(lambda_star)) throw InvalidArgument("lambda_star must be finite and >= 0");
        if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in [0, 1]");
        if (mu < 1) throw InvalidArgument("mu must be >= 1");
    }
};

enum class Regime { Transient, NullRecurrent, PositiveRecurrent };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::Transient: return "Transient";
        case Regime::NullRecurrent: return "NullRecurrent";
        case Regime::PositiveRecurrent: return "PositiveRecurrent";
    }
    return "?";
}

inline Regime classify_regime(const ChainParams& params) {
    params.validate();
    if (params.delta > 0.0) return Regime::PositiveRecurrent;
    const double mu = params.mu;
    if (params.lambda_star > mu) return Regime::Transient;
    if (params.lambda_star == mu) return Regime::NullRecurrent;
    return Regime::PositiveRecurrent;
}

/// Truncated distribution of the pool size, probs[n] for n = 0..n_max.
struct PoolDistribution {
    ChainParams params;
    std::vector<double> probs;
    std::size_t n_max = 0;
    double tail_mass = 0.0;
    double residual = 0.0;
    /// log(probs[0]); stays finite when probs[0] underflows (mu = 1, delta > 0).
    double log_p0 = numerics::kNegInf;
    std::size_t iterations = 0;

    double p0() const { return probs.empty() ? 0.0 : probs.front(); }

    static PoolDistribution point_mass(std::size_t n, std::size_t n_max, ChainParams params = {}) {
        PoolDistribution p;
        p.params = params;
        p.n_max = std::max(n, n_max);
        p.probs.assign(p.n_max + 1, 0.0);
        p.probs[n] = 1.0;
        p.log_p0 = n == 0 ? 0.0 : numerics::kNegInf;
        return p;
    }
};

/// L1 distance between two truncated distributions, counting tail masses.
inline double l1_distance(const PoolDistribution& a, const PoolDistribution& b) {
    const std::size_t n = std::max(a.probs.size(), b.probs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.probs.size() ? a.probs[i] : 0.0;
        const double y = i < b.probs.size() ? b.probs[i] : 0.0;
        d += std::abs(x - y);
    }
    return d + std::abs(a.tail_mass - b.tail_mass);
}

namespace detail {

/// One round of the chain on a fixed truncation: winners leave, survivors
/// are thinned, arrivals are convolved in. Kernels are built once.
class TransitionOperator {
public:
    TransitionOperator(const ChainParams& params, std::size_t n_max) : params_(params), n_max_(n_max) {
        params.validate();
        arrivals_ = numerics::poisson_pmf(params.lambda_star);
        arrival_tails_ = numerics::upper_tails(arrivals_);
        if (params.delta > 0.0 && params.delta < 1.0) {
            rows_.reserve(n_max + 1);
            for (std::size_t m = 0; m <= n_max; ++m) rows_.push_back(numerics::binomial_row(m, 1.0 - params.delta));
        }
        survivors_.assign(n_max + 1, 0.0);
        thinned_.assign(n_max + 1, 0.0);
    }

    std::size_t n_max() const { return n_max_; }

    /// Writes the image of `in` into `out` (both length n_max + 1) and
    /// returns the mass pushed beyond n_max.
    double apply(std::span<const double> in, std::span<double> out) {
        const std::size_t mu = static_cast<std::size_t>(params_.mu);
        const std::size_t n = n_max_ + 1;

        std::fill(survivors_.begin(), survivors_.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) survivors_[i > mu ? i - mu : 0] += in[i];

        const std::size_t top = n > mu ? n - mu : 1;
        if (params_.delta == 0.0) {
            std::copy(survivors_.begin(), survivors_.end(), thinned_.begin());
        } else if (params_.delta == 1.0) {
            std::fill(thinned_.begin(), thinned_.end(), 0.0);
            thinned_[0] = std::accumulate(survivors_.begin(), survivors_.end(), 0.0);
        } else {
            std::fill(thinned_.begin(), thinned_.end(), 0.0);
            for (std::size_t m = 0; m < top; ++m) {
                const double q = survivors_[m];
                if (q == 0.0) continue;
                const auto& row = rows_[m];
                for (std::size_t j = 0; j < row.pmf.size(); ++j) thinned_[row.lo + j] += q * row.pmf[j];
            }
        }

        std::fill(out.begin(), out.end(), 0.0);
        double overflow = 0.0;
        const std::size_t alen = arrivals_.size();
        for (std::size_t k = 0; k < n; ++k) {
            const double r = thinned_[k];
            if (r == 0.0) continue;
            const std::size_t room = n_max_ - k;
            const std::size_t jmax = std::min(room, alen - 1);
            for (std::size_t j = 0; j <= jmax; ++j) out[k + j] += r * arrivals_[j];
            if (room < alen) overflow += r * arrival_tails_[room];
        }
        return overflow;
    }

private:
    ChainParams params_;
    std::size_t n_max_;
    std::vector<double> arrivals_;
    std::vector<double> arrival_tails_;
    std::vector<numerics::BinomialRow> rows_;
    std::vector<double> survivors_;
    std::vector<double> thinned_;
};

inline std::size_t initial_truncation(const ChainParams& p) {
    const double scale = 8.0 * p.lambda_star / std::max(p.delta, 0.05);
    return std::max<std::size_t>({32, static_cast<std::size_t>(std::ceil(scale)), static_cast<std::size_t>(4 * p.mu)});
}

}  // namespace detail

/// Log of the stationary empty-pool probability for mu = 1, delta in (0, 1].
///
/// Iterating the stationary PGF equation along the orbit z_k = 1 - (1-delta)^k
/// of z -> delta + (1-delta) z collapses it to
///     p0 = c_inf / (1 + sum_{k>=1} c_k (1-delta)^k),
///     c_k = prod_{j<k} exp(-lambda (1-delta)^j) / z_{j+1},
/// a sum of positive terms, evaluated here in log space so that p0 far
/// below the double range (large pools) keeps full relative accuracy.
inline double empty_pool_log_probability(double lambda_star, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("empty_pool_log_probability needs delta in (0, 1]");
    if (!(lambda_star >= 0.0)) throw InvalidArgument("lambda_star must be >= 0");
    if (lambda_star == 0.0) return 0.0;
    if (delta == 1.0) return -lambda_star;
    const double log_s = std::log1p(-delta);
    double log_c = 0.0;
    double acc = 0.0;  // log(1 + sum c_k s^k)
    for (std::size_t k = 0; k < 100'000'000; ++k) {
        const double kd = static_cast<double>(k);
        const double s_k = std::exp(kd * log_s);
        const double z_next = -std::expm1((kd + 1.0) * log_s);
        log_c += -lambda_star * s_k - std::log(z_next);
        const double term = log_c + (kd + 1.0) * log_s;
        acc = numerics::log_sum_exp(acc, term);
        const double remaining_c = (lambda_star + 1.0) * s_k / delta;
        if (remaining_c < 1e-17 && term - acc < std::log(1e-18 * delta)) break;
    }
    return log_c - acc;
}

/// One synchronous round applied to `p`. Mass leaving the truncation is
/// added to tail_mass, so probs + tail_mass stays a probability vector.
inline PoolDistribution apply_transition(const PoolDistribution& p, const ChainParams& params) {
    detail::TransitionOperator op(params, p.n_max);
    PoolDistribution out;
    out.params = params;
    out.n_max = p.n_max;
    out.probs.assign(p.n_max + 1, 0.0);
    const double overflow = op.apply(p.probs, out.probs);
    out.tail_mass = p.tail_mass + overflow;
    out.log_p0 = out.probs[0] > 0.0 ? std::log(out.probs[0]) : numerics::kNegInf;
    out.residual = 0.0;
    return out;
}

struct SolveOptions {
    double tol = 1e-12;
    double tail_tol = 1e-12;
    std::size_t max_iterations = 1'000'000;
};

/// Stationary distribution by power iteration of the round transition on
/// an adaptively grown truncation, starting from an empty pool.
inline PoolDistribution solve_stationary(const ChainParams& params, const SolveOptions& opt = {}) {
    const Regime regime = classify_regime(params);
    if (regime != Regime::PositiveRecurrent) {
        throw NonErgodic("chain with lambda*=" + std::to_string(params.lambda_star) + ", delta=" + std::to_string(params.delta) +
                         ", mu=" + std::to_string(params.mu) + " is " + to_string(regime) + "; no stationary distribution");
    }
    std::size_t n_max = detail::initial_truncation(params);
    std::vector<double> cur(n_max + 1, 0.0), next(n_max + 1, 0.0);
    cur[0] = 1.0;
    double cur_tail = 0.0;
    std::size_t total_iter = 0;
    // Mass reaching the edge this fast means the truncation is far too small.
    const double grow_now = std::max(std::sqrt(opt.tail_tol), 1e-6);

    for (;;) {
        detail::TransitionOperator op(params, n_max);
        double prev_diff = -1.0;
        double diff = 0.0;
        double tail = 0.0;
        bool converged = false;
        bool grow = false;
        while (total_iter < opt.max_iterations) {
            const double overflow = op.apply(cur, next);
            ++total_iter;
            const double kept = std::accumulate(next.begin(), next.end(), 0.0);
            const double scale = kept > 0.0 ? (1.0 - overflow) / kept : 0.0;
            for (double& v : next) v *= scale;
            tail = overflow;
            diff = std::abs(tail - cur_tail);
            for (std::size_t i = 0; i <= n_max; ++i) diff += std::abs(next[i] - cur[i]);
            std::swap(cur, next);
            cur_tail = tail;
            if (tail > grow_now) {
                grow = true;
                break;
            }
            if (diff < opt.tol) {
                // Geometric convergence: what is still to come is about
                // diff * rho / (1 - rho).
                const double rho = prev_diff > 0.0 ? diff / prev_diff : 0.0;
                const bool small_remainder = rho < 1.0 && diff * rho / (1.0 - rho) < opt.tol;
                if (small_remainder || diff < 1e-3 * opt.tol) {
                    converged = true;
                    break;
                }
            }
            prev_diff = diff;
        }
        if (!converged && !grow) {
            throw NoConvergence("stationary solve did not converge within " + std::to_string(opt.max_iterations) + " iterations");
        }
        if (converged) {
            double upper = 0.0;
            for (std::size_t i = n_max - n_max / 8; i <= n_max; ++i) upper += cur[i];
            if (tail < opt.tail_tol && upper < opt.tail_tol) {
                PoolDistribution out;
                out.params = params;
                out.n_max = n_max;
                out.probs = cur;
                out.tail_mass = tail;
                out.residual = diff;
                out.iterations = total_iter;
                if (params.mu == 1 && params.delta > 0.0) {
                    out.log_p0 = empty_pool_log_probability(params.lambda_star, params.delta);
                } else {
                    out.log_p0 = cur[0] > 0.0 ? std::log(cur[0]) : numerics::kNegInf;
                }
                return out;
            }
        }
        n_max *= 2;
        cur.resize(n_max + 1, 0.0);
        next.assign(n_max + 1, 0.0);
    }
}

/// Exact stationary distribution for delta = 0, mu = 1, lambda* < 1 from
/// the forward balance recurrence, seeded with p0 = 1 - lambda* and
/// p1 = p0 (e^lambda* - 1).
inline PoolDistribution stationary_zero_uncertainty(double lambda_star, double tail_tol = 1e-12) {
    if (!(lambda_star >= 0.0 && lambda_star < 1.0)) {
        throw NonErgodic("zero-uncertainty chain needs 0 <= lambda* < 1, got " + std::to_string(lambda_star));
    }
    PoolDistribution out;
    out.params = {lambda_star, 0.0, 1};
    if (lambda_star == 0.0) {
        out = PoolDistribution::point_mass(0, 1, out.params);
        return out;
    }
    const std::size_t cap = 1'000'000;
    const auto pmf = numerics::poisson_pmf(lambda_star);
    auto arrival = [&](std::size_t k) -> long double { return k < pmf.size() ? pmf[k] : 0.0L; };

    std::vector<long double> p{1.0L - lambda_star};
    p.push_back(p[0] * std::expm1(static_cast<long double>(lambda_star)));
    long double total = p[0] + p[1];
    for (std::size_t m = 1; 1.0L - total >= tail_tol && m < cap; ++m) {
        // p_m = (p0 + p1) pi_m + sum_{n=2}^{m+1} p_n pi_{m-n+1}, solved for p_{m+1}.
        long double rhs = p[m] - (p[0] + p[1]) * arrival(m);
        const std::size_t first = m + 1 > pmf.size() ? std::max<std::size_t>(2, m + 2 - pmf.size()) : 2;
        for (std::size_t n = first; n <= m; ++n) rhs -= p[n] * arrival(m - n + 1);
        const long double next = std::max(rhs / arrival(0), 0.0L);
        p.push_back(next);
        total += next;
    }
    out.probs.assign(p.begin(), p.end());
    out.n_max = out.probs.size() - 1;
    out.tail_mass = static_cast<double>(std::max(0.0L, 1.0L - total));
    out.residual = 0.0;
    out.log_p0 = std::log(out.probs[0]);
    return out;
}

/// sum_n p_n z^n over the truncated support.
inline double pgf_eval(const PoolDistribution& p, double z) {
    if (!(z >= 0.0 && z <= 1.0)) throw InvalidArgument("pgf_eval: z must lie in [0, 1]");
    double acc = 0.0;
    for (std::size_t i = p.probs.size(); i-- > 0;) acc = acc * z + p.probs[i];
    return acc;
}

inline double mean_pool_size(const PoolDistribution& p) {
    double m = 0.0;
    for (std::size_t n = 0; n < p.probs.size(); ++n) m += static_cast<double>(n) * p.probs[n];
    return m;
}

/// Closed-form mean pool size: (lambda - (1 - p0)(1 - delta)) / delta for
/// delta > 0, and lambda (2 - lambda) / (2 (1 - lambda)) for delta = 0.
inline double mean_closed(const ChainParams& params, double p0) {
    params.validate();
    if (params.mu != 1) throw InvalidArgument("mean_closed covers the single-winner chain only");
    const double lam = params.lambda_star;
    if (params.delta > 0.0) return (lam - (1.0 - p0) * (1.0 - params.delta)) / params.delta;
    if (lam >= 1.0) throw NonErgodic("zero-uncertainty mean diverges for lambda* >= 1");
    return lam * (2.0 - lam) / (2.0 * (1.0 - lam));
}

/// Expected rounds until a value-x bidder wins with no uncertainty and one
/// winner per round: 1 / (1 - lambda (1 - F(x))).
inline double expected_time_to_win(double lambda, const ValueDistribution& dist, double x) {
    const double lambda_star = lambda * (1.0 - dist.cdf(x));
    if (lambda_star >= 1.0) {
        throw NonErgodic("value is at or below the winners' threshold; the expected wait diverges");
    }
    return 1.0 / (1.0 - lambda_star);
}

}  // namespace unending
