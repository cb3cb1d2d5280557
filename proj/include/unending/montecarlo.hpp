#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chain.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "random.hpp"
#include "values.hpp"
#include "winner.hpp"

namespace unending {

enum class BidSource {
    /// Posted price for delta = 0 with lambda > mu, the bid curve for
    /// delta > 0 with mu = 1, values only otherwise.
    Automatic,
    PostedPrice,
    Curve,
    ValuesOnly,
};

inline std::string to_string(BidSource s) {
    switch (s) {
        case BidSource::Automatic: return "auto";
        case BidSource::PostedPrice: return "posted";
        case BidSource::Curve: return "curve";
        case BidSource::ValuesOnly: return "values";
    }
    return "?";
}

/// One tracked bidder of a given value, inserted at the start of a round.
struct Probe {
    double value = 0.0;
    /// Round in which the probe first competes; 0 means right after warmup.
    std::uint64_t insert_round = 0;
    std::uint64_t replications = 1;
};

struct LambdaSwitch {
    std::uint64_t round = 0;
    double lambda = 0.0;
    /// Bid curve used for prices after the switch (BidSource::Curve).
    std::shared_ptr<const BidCurve> bid_after;
};

struct SimConfig {
    double lambda = 2.0;
    double delta = 0.0;
    int mu = 1;
    ValueDistribution dist;
    /// Total rounds, warmup included.
    std::uint64_t horizon = 1'010'000;
    /// Unset: max(1e4, 20 / delta).
    std::optional<std::uint64_t> warmup;
    std::uint64_t seed = 1;
    std::vector<Probe> probes;
    std::optional<LambdaSwitch> lambda_switch;
    BidSource bid_source = BidSource::Automatic;
    std::shared_ptr<const BidCurve> bid_curve;
    std::size_t pool_cap = 10'000'000;
    /// Arrivals below this value are dropped (delta = 0 memory control).
    std::optional<double> prune_floor;
    std::vector<double> initial_pool;
    std::size_t autocorr_lags = 200;
    std::size_t percentile_buckets = 1000;
    std::size_t batches = 64;
    std::ostream* trace = nullptr;

    std::uint64_t resolved_warmup() const {
        if (warmup) return *warmup;
        if (delta > 0.0) return std::max<std::uint64_t>(10'000, static_cast<std::uint64_t>(std::ceil(20.0 / delta)));
        return 10'000;
    }

    void validate() const {
        ChainParams{lambda, delta, mu}.validate();
        if (horizon == 0) throw InvalidArgument("horizon must be positive");
        if (resolved_warmup() >= horizon) throw InvalidArgument("warmup must be shorter than the horizon");
        if (percentile_buckets == 0 || batches == 0) throw InvalidArgument("bucket and batch counts must be positive");
        const double lo = dist.support_infimum();
        const double hi = dist.support_supremum();
        for (const auto& p : probes) {
            if (!(p.value >= lo && p.value <= hi)) throw InvalidArgument("probe value outside the distribution's support");
            if (p.replications == 0) throw InvalidArgument("probe replications must be positive");
        }
        for (double v : initial_pool) {
            if (!(v >= lo && v <= hi)) throw InvalidArgument("initial pool value outside the distribution's support");
        }
        if (lambda_switch) {
            if (lambda_switch->round == 0 || lambda_switch->round > horizon) throw InvalidArgument("switch round outside the horizon");
            ChainParams{lambda_switch->lambda, delta, mu}.validate();
        }
        if (bid_source == BidSource::PostedPrice) {
            if (delta != 0.0) throw InvalidArgument("posted-price bidding is the delta = 0 equilibrium");
            threshold_value(dist, lambda, mu);
            if (lambda_switch) threshold_value(dist, lambda_switch->lambda, mu);
        }
        if (bid_source == BidSource::Curve) {
            if (!bid_curve) throw InvalidArgument("bid source 'curve' needs a bid curve");
            if (lambda_switch && !lambda_switch->bid_after) throw InvalidArgument("bid source 'curve' needs a post-switch bid curve");
        }
    }
};

struct ProbeStats {
    double value = 0.0;
    std::uint64_t replications = 0;
    std::uint64_t wins = 0;
    std::uint64_t removed = 0;
    std::uint64_t unresolved = 0;
    double success_rate = 0.0;
    double success_se = 0.0;
    /// Rounds from insertion to winning, insertion round counted as 1.
    double mean_rounds = 0.0;
    double rounds_se = 0.0;
};

struct SimReport {
    double lambda = 0.0;
    double delta = 0.0;
    int mu = 1;
    std::uint64_t seed = 0;
    std::uint64_t rounds_simulated = 0;
    std::uint64_t warmup = 0;
    std::string bid_source;
    /// Pool size after arrivals, one count per post-warmup round.
    std::vector<std::uint64_t> pool_histogram;
    std::vector<std::uint64_t> winner_histogram;
    std::uint64_t winners = 0;
    /// Winners valued below the posted price (when one exists).
    std::uint64_t winners_below_threshold = 0;
    std::optional<double> threshold;
    std::uint64_t price_count = 0;
    double price_mean = 0.0;
    double price_std = 0.0;
    double price_se = 0.0;
    double pool_mean = 0.0;
    double pool_mean_se = 0.0;
    std::size_t max_pool = 0;
    std::uint64_t pruned = 0;
    bool conservation_ok = true;
    std::vector<ProbeStats> probes;
    std::vector<double> autocorr;
    /// Post-warmup winner values in order; not serialized.
    std::vector<double> winner_series;
};

/// Called for every winner: (round, value, price). Price is NaN with
/// BidSource::ValuesOnly.
using WinnerObserver = std::function<void(std::uint64_t, double, double)>;

/// ACF of `series` at lags 0..max_lag with the biased (1/n) autocovariance,
/// so every coefficient lies in [-1, 1].
inline std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
    const std::size_t n = series.size();
    if (n < 2) throw InvalidArgument("autocorrelation needs at least two observations");
    max_lag = std::min(max_lag, n - 1);
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;
    double c0 = 0.0;
    for (double v : centered) c0 += v * v;
    std::vector<double> rho(max_lag + 1, 0.0);
    if (c0 == 0.0) {
        rho[0] = 1.0;
        return rho;
    }
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += centered[i] * centered[i + k];
        rho[k] = s / c0;
    }
    return rho;
}

/// Half the L1 distance; the shorter vector is padded with zeros.
inline double tv_distance(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        s += std::abs(x - y);
    }
    return 0.5 * s;
}

inline std::vector<double> normalized_histogram(const std::vector<std::uint64_t>& h) {
    double total = 0.0;
    for (auto c : h) total += static_cast<double>(c);
    std::vector<double> out(h.size(), 0.0);
    if (total == 0.0) return out;
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = static_cast<double>(h[i]) / total;
    return out;
}

/// TV distance between the empirical pool histogram and a solved
/// distribution; the solver's truncated tail counts as disagreement.
inline double empirical_vs_solver(const SimReport& report, const PoolDistribution& p) {
    const auto emp = normalized_histogram(report.pool_histogram);
    return tv_distance(emp, p.probs) + 0.5 * p.tail_mass;
}

namespace detail {

/// Max-heap on value. Uniform positions are uniform bidders, so a random
/// index is a uniformly chosen victim.
class Pool {
public:
    struct Entry {
        double value;
        std::uint32_t tag;
    };

    std::size_t size() const { return heap_.size(); }
    bool empty() const { return heap_.empty(); }

    void push(double value, std::uint32_t tag = 0) {
        heap_.push_back({value, tag});
        sift_up(heap_.size() - 1);
    }

    Entry pop_max() { return remove_at(0); }

    Entry remove_at(std::size_t i) {
        Entry out = heap_[i];
        heap_[i] = heap_.back();
        heap_.pop_back();
        if (i < heap_.size()) {
            sift_up(i);
            sift_down(i);
        }
        return out;
    }

private:
    void sift_up(std::size_t i) {
        Entry e = heap_[i];
        while (i > 0) {
            const std::size_t parent = (i - 1) / 2;
            if (!(heap_[parent].value < e.value)) break;
            heap_[i] = heap_[parent];
            i = parent;
        }
        heap_[i] = e;
    }

    void sift_down(std::size_t i) {
        const std::size_t n = heap_.size();
        Entry e = heap_[i];
        for (;;) {
            std::size_t child = 2 * i + 1;
            if (child >= n) break;
            if (child + 1 < n && heap_[child].value < heap_[child + 1].value) ++child;
            if (!(e.value < heap_[child].value)) break;
            heap_[i] = heap_[child];
            i = child;
        }
        heap_[i] = e;
    }

    std::vector<Entry> heap_;
};

/// Price rule in force for one arrival rate.
struct Pricing {
    BidSource source = BidSource::ValuesOnly;
    double threshold = 0.0;
    std::shared_ptr<const BidCurve> curve;

    double operator()(double v) const {
        switch (source) {
            case BidSource::PostedPrice: return std::min(v, threshold);
            case BidSource::Curve: return std::min(v, curve->bid_at(v));
            default: return std::numeric_limits<double>::quiet_NaN();
        }
    }
};

inline Pricing make_pricing(const SimConfig& cfg, double lambda, const std::shared_ptr<const BidCurve>& given) {
    Pricing p;
    BidSource s = cfg.bid_source;
    if (s == BidSource::Automatic) {
        if (cfg.delta == 0.0 && lambda > cfg.mu) s = BidSource::PostedPrice;
        else if (cfg.delta > 0.0 && cfg.mu == 1) s = BidSource::Curve;
        else s = BidSource::ValuesOnly;
    }
    p.source = s;
    if (s == BidSource::PostedPrice) p.threshold = threshold_value(cfg.dist, lambda, cfg.mu);
    if (s == BidSource::Curve) {
        p.curve = given;
        if (!p.curve) {
            p.curve = std::make_shared<const BidCurve>(bid_with_uncertainty(cfg.dist, build_winner_curve(lambda, cfg.delta, 1)));
        }
    }
    return p;
}

/// Round-by-round engine shared by simulate and the probe replications.
class Simulator {
public:
    Simulator(const SimConfig& cfg, Rng rng, Pricing pricing)
        : cfg_(cfg), rng_(std::move(rng)), pricing_(std::move(pricing)), lambda_(cfg.lambda) {
        for (double v : cfg.initial_pool) pool_.push(v);
        initial_ = pool_.size();
    }

    struct Round {
        std::uint64_t round = 0;
        std::size_t winners = 0;
        std::size_t removed = 0;
        std::size_t arrivals = 0;
        /// Tag of a probe that won or was removed this round, if any.
        std::uint32_t probe_won = 0;
        std::uint32_t probe_removed = 0;
    };

    void insert(double value, std::uint32_t tag) {
        pool_.push(value, tag);
        ++inserted_;
    }

    void set_lambda(double lambda, Pricing pricing) {
        lambda_ = lambda;
        pricing_ = std::move(pricing);
    }

    const Pricing& pricing() const { return pricing_; }
    std::size_t pool_size() const { return pool_.size(); }
    std::uint64_t pruned() const { return pruned_; }

    /// Steps (1)-(3) of one round. `on_winner(value, price)` sees each winner
    /// in order of decreasing value.
    template <class F>
    Round step(F&& on_winner) {
        Round r;
        r.round = ++round_;
        const std::size_t k = std::min<std::size_t>(pool_.size(), static_cast<std::size_t>(cfg_.mu));
        for (std::size_t i = 0; i < k; ++i) {
            const auto e = pool_.pop_max();
            if (e.tag != 0) r.probe_won = e.tag;
            on_winner(e.value, pricing_(e.value));
        }
        r.winners = k;
        if (cfg_.delta > 0.0 && !pool_.empty()) {
            const auto victims = rng_.binomial(pool_.size(), cfg_.delta);
            for (std::uint64_t i = 0; i < victims; ++i) {
                const auto e = pool_.remove_at(static_cast<std::size_t>(rng_.index(pool_.size())));
                if (e.tag != 0) r.probe_removed = e.tag;
            }
            r.removed = static_cast<std::size_t>(victims);
        }
        const auto arrivals = rng_.poisson(lambda_);
        for (std::uint64_t i = 0; i < arrivals; ++i) {
            const double v = cfg_.dist.quantile(rng_.uniform());
            if (cfg_.prune_floor && v < *cfg_.prune_floor) {
                ++pruned_;
                continue;
            }
            pool_.push(v);
        }
        r.arrivals = static_cast<std::size_t>(arrivals);
        if (pool_.size() > cfg_.pool_cap) {
            throw MemoryBudget("bidder pool exceeded " + std::to_string(cfg_.pool_cap) + " at round " + std::to_string(r.round) +
                               "; the chain is not positive recurrent (enable pruning or raise the cap)");
        }
        arrived_ += arrivals;
        won_ += r.winners;
        removed_ += r.removed;
        return r;
    }

    /// Everyone who entered is either still here or left by winning,
    /// removal or pruning.
    bool balanced() const { return initial_ + inserted_ + arrived_ == pool_.size() + won_ + removed_ + pruned_; }

private:
    const SimConfig& cfg_;
    Rng rng_;
    Pricing pricing_;
    double lambda_;
    Pool pool_;
    std::uint64_t round_ = 0;
    std::uint64_t initial_ = 0;
    std::uint64_t inserted_ = 0;
    std::uint64_t arrived_ = 0;
    std::uint64_t won_ = 0;
    std::uint64_t removed_ = 0;
    std::uint64_t pruned_ = 0;
};

/// Mean and standard error from equal-size batch means.
struct BatchMeans {
    std::vector<double> sum;
    std::vector<double> count;

    explicit BatchMeans(std::size_t batches) : sum(batches, 0.0), count(batches, 0.0) {}

    void add(std::size_t batch, double v) {
        sum[batch] += v;
        count[batch] += 1.0;
    }

    double standard_error() const {
        std::vector<double> means;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            if (count[i] > 0.0) means.push_back(sum[i] / count[i]);
        }
        if (means.size() < 2) return 0.0;
        double m = 0.0;
        for (double v : means) m += v;
        m /= static_cast<double>(means.size());
        double ss = 0.0;
        for (double v : means) ss += (v - m) * (v - m);
        return std::sqrt(ss / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
    }
};

inline ProbeStats summarize_probe(double value, std::span<const std::int64_t> outcomes) {
    // outcome > 0: won after that many rounds; 0: removed; -1: unresolved.
    ProbeStats s;
    s.value = value;
    s.replications = outcomes.size();
    double sum = 0.0, sum2 = 0.0;
    for (auto o : outcomes) {
        if (o > 0) {
            ++s.wins;
            sum += static_cast<double>(o);
            sum2 += static_cast<double>(o) * static_cast<double>(o);
        } else if (o == 0) {
            ++s.removed;
        } else {
            ++s.unresolved;
        }
    }
    const double resolved = static_cast<double>(s.wins + s.removed);
    if (resolved > 0.0) {
        s.success_rate = static_cast<double>(s.wins) / resolved;
        s.success_se = std::sqrt(s.success_rate * (1.0 - s.success_rate) / resolved);
    }
    if (s.wins > 0) {
        const double w = static_cast<double>(s.wins);
        s.mean_rounds = sum / w;
        const double var = s.wins > 1 ? (sum2 - w * s.mean_rounds * s.mean_rounds) / (w - 1.0) : 0.0;
        s.rounds_se = std::sqrt(std::max(0.0, var) / w);
    }
    return s;
}

}  // namespace detail

/// Runs the auction for config.horizon rounds. Each round: the min(n, mu)
/// highest values win and pay their bid, each survivor leaves with
/// probability delta, then Poisson(lambda) new bidders arrive. Statistics
/// cover rounds after the warmup. Same config and seed, same report.
inline SimReport simulate(const SimConfig& cfg, const WinnerObserver& observer = {}) {
    cfg.validate();
    const std::uint64_t warmup = cfg.resolved_warmup();
    auto pricing = detail::make_pricing(cfg, cfg.lambda, cfg.bid_curve);
    std::optional<detail::Pricing> pricing_after;
    if (cfg.lambda_switch) {
        pricing_after = detail::make_pricing(cfg, cfg.lambda_switch->lambda, cfg.lambda_switch->bid_after);
    }

    SimReport rep;
    rep.lambda = cfg.lambda;
    rep.delta = cfg.delta;
    rep.mu = cfg.mu;
    rep.seed = cfg.seed;
    rep.warmup = warmup;
    rep.bid_source = to_string(pricing.source);
    rep.winner_histogram.assign(cfg.percentile_buckets, 0);
    if (pricing.source == BidSource::PostedPrice) rep.threshold = pricing.threshold;

    detail::Simulator sim(cfg, Rng{cfg.seed}, pricing);
    const std::uint64_t measured = cfg.horizon - warmup;
    const std::uint64_t batch_len = std::max<std::uint64_t>(1, measured / cfg.batches);
    detail::BatchMeans pool_batches(cfg.batches), price_batches(cfg.batches);
    double pool_sum = 0.0, price_sum = 0.0, price_sum2 = 0.0;

    std::vector<std::size_t> probe_at;
    for (std::size_t i = 0; i < cfg.probes.size(); ++i) probe_at.push_back(i);
    std::vector<std::int64_t> probe_outcome(cfg.probes.size(), -1);
    std::vector<std::uint64_t> probe_inserted(cfg.probes.size(), 0);
    auto probe_round = [&](std::size_t i) { return cfg.probes[i].insert_round == 0 ? warmup + 1 : cfg.probes[i].insert_round; };

    if (cfg.trace) *cfg.trace << "round,pool_size,winner_value,price\n";
    for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
        if (cfg.lambda_switch && t == cfg.lambda_switch->round) {
            sim.set_lambda(cfg.lambda_switch->lambda, *pricing_after);
            if (pricing_after->source == BidSource::PostedPrice) rep.threshold = pricing_after->threshold;
        }
        for (std::size_t i = 0; i < cfg.probes.size(); ++i) {
            if (probe_round(i) == t) {
                sim.insert(cfg.probes[i].value, static_cast<std::uint32_t>(i + 1));
                probe_inserted[i] = t;
            }
        }
        const bool measuring = t > warmup;
        const std::size_t batch = measuring ? std::min<std::size_t>(cfg.batches - 1, (t - warmup - 1) / batch_len) : 0;
        const std::size_t pool_before = sim.pool_size();
        bool traced = false;
        const auto r = sim.step([&](double v, double price) {
            if (cfg.trace) {
                *cfg.trace << t << ',' << pool_before << ',' << format_double(v) << ',' << format_double(price) << '\n';
                traced = true;
            }
            if (observer) observer(t, v, price);
            if (!measuring) return;
            ++rep.winners;
            const double g = cfg.dist.cdf(v);
            auto bucket = static_cast<std::size_t>(g * static_cast<double>(cfg.percentile_buckets));
            rep.winner_histogram[std::min(bucket, cfg.percentile_buckets - 1)]++;
            if (rep.threshold && v < *rep.threshold) ++rep.winners_below_threshold;
            rep.winner_series.push_back(v);
            if (!std::isnan(price)) {
                ++rep.price_count;
                price_sum += price;
                price_sum2 += price * price;
                price_batches.add(batch, price);
            }
        });
        if (cfg.trace && !traced) *cfg.trace << t << ',' << pool_before << ",,\n";
        if (r.probe_won) probe_outcome[r.probe_won - 1] = static_cast<std::int64_t>(t - probe_inserted[r.probe_won - 1] + 1);
        if (r.probe_removed) probe_outcome[r.probe_removed - 1] = 0;
        if (!measuring) continue;
        const std::size_t n = sim.pool_size();
        if (rep.pool_histogram.size() <= n) rep.pool_histogram.resize(n + 1, 0);
        rep.pool_histogram[n]++;
        rep.max_pool = std::max(rep.max_pool, n);
        pool_sum += static_cast<double>(n);
        pool_batches.add(batch, static_cast<double>(n));
    }

    rep.rounds_simulated = cfg.horizon;
    rep.pruned = sim.pruned();
    rep.conservation_ok = sim.balanced();
    rep.pool_mean = pool_sum / static_cast<double>(measured);
    rep.pool_mean_se = pool_batches.standard_error();
    if (rep.price_count > 0) {
        const double c = static_cast<double>(rep.price_count);
        rep.price_mean = price_sum / c;
        rep.price_std = rep.price_count > 1 ? std::sqrt(std::max(0.0, (price_sum2 - c * rep.price_mean * rep.price_mean) / (c - 1.0))) : 0.0;
        rep.price_se = price_batches.standard_error();
    }
    for (std::size_t i = 0; i < cfg.probes.size(); ++i) {
        rep.probes.push_back(detail::summarize_probe(cfg.probes[i].value, std::span(&probe_outcome[i], 1)));
    }
    if (rep.winner_series.size() > cfg.autocorr_lags && cfg.autocorr_lags > 0) {
        rep.autocorr = autocorrelation(rep.winner_series, cfg.autocorr_lags);
    }
    return rep;
}

/// Winner-value ACF at lags 0..lags from a report's series.
inline std::vector<double> winner_autocorrelation(const SimReport& report, std::size_t lags) {
    if (report.winner_series.size() < 10'000) {
        throw InvalidArgument("autocorrelation needs at least 1e4 post-warmup winners, got " +
                              std::to_string(report.winner_series.size()));
    }
    return autocorrelation(report.winner_series, lags);
}

/// Independent replications per probe: warm a fresh pool for
/// `insert_round - 1` rounds (the resolved warmup when 0), insert the probe
/// and run until it wins or is removed, for at most `horizon` rounds in
/// total. Replication r of probe k uses seed words {seed, k, r}.
inline std::vector<ProbeStats> probe_time_to_win(const SimConfig& cfg, unsigned threads = 0) {
    cfg.validate();
    if (cfg.lambda_switch) throw InvalidArgument("probe replications do not support an arrival-rate switch");
    const auto pricing = detail::make_pricing(cfg, cfg.lambda, cfg.bid_curve);
    std::vector<ProbeStats> out;
    for (std::size_t k = 0; k < cfg.probes.size(); ++k) {
        const auto& probe = cfg.probes[k];
        const std::uint64_t insert = probe.insert_round == 0 ? cfg.resolved_warmup() + 1 : probe.insert_round;
        std::vector<std::int64_t> outcome(probe.replications, -1);
        detail::parallel_for(probe.replications, threads, [&](std::size_t r) {
            detail::Simulator sim(cfg, Rng{cfg.seed, k, r}, pricing);
            const auto ignore = [](double, double) {};
            for (std::uint64_t t = 1; t < insert; ++t) sim.step(ignore);
            sim.insert(probe.value, 1);
            for (std::uint64_t t = insert; t <= cfg.horizon; ++t) {
                const auto res = sim.step(ignore);
                if (res.probe_won) {
                    outcome[r] = static_cast<std::int64_t>(t - insert + 1);
                    return;
                }
                if (res.probe_removed) {
                    outcome[r] = 0;
                    return;
                }
            }
        });
        out.push_back(detail::summarize_probe(probe.value, outcome));
    }
    return out;
}

struct RegimeSwitchReport {
    SimReport sim;
    double lambda_before = 0.0;
    double lambda_after = 0.0;
    std::uint64_t switch_round = 0;
    std::uint64_t block = 0;
    /// First round of each block.
    std::vector<std::uint64_t> block_start;
    /// Mean winner percentile and price per block (NaN for empty blocks).
    std::vector<double> block_percentile;
    std::vector<double> block_price;
    double level_before = 0.0;
    double level_after = 0.0;
    /// Rounds after the switch until a block mean crosses the midpoint.
    std::optional<std::uint64_t> rounds_to_half_gap;
};

/// Block-mean winner percentiles and prices over the whole run, with the
/// pre-switch level, the final level and the time to cover half the gap.
/// Exploratory: nothing here passes or fails.
inline RegimeSwitchReport regime_switch_experiment(const SimConfig& cfg, std::uint64_t block = 0) {
    if (!(cfg.delta > 0.0)) throw InvalidArgument("the regime-switch experiment needs delta > 0");
    if (block == 0) block = std::max<std::uint64_t>(10, static_cast<std::uint64_t>(std::ceil(0.1 / cfg.delta)));
    const std::size_t blocks = static_cast<std::size_t>((cfg.horizon + block - 1) / block);
    std::vector<double> g_sum(blocks, 0.0), p_sum(blocks, 0.0), g_n(blocks, 0.0), p_n(blocks, 0.0);
    RegimeSwitchReport rep;
    rep.sim = simulate(cfg, [&](std::uint64_t t, double v, double price) {
        const auto b = static_cast<std::size_t>((t - 1) / block);
        g_sum[b] += cfg.dist.cdf(v);
        g_n[b] += 1.0;
        if (!std::isnan(price)) {
            p_sum[b] += price;
            p_n[b] += 1.0;
        }
    });
    rep.lambda_before = cfg.lambda;
    rep.lambda_after = cfg.lambda_switch ? cfg.lambda_switch->lambda : cfg.lambda;
    rep.switch_round = cfg.lambda_switch ? cfg.lambda_switch->round : 0;
    rep.block = block;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t b = 0; b < blocks; ++b) {
        rep.block_start.push_back(b * block + 1);
        rep.block_percentile.push_back(g_n[b] > 0.0 ? g_sum[b] / g_n[b] : nan);
        rep.block_price.push_back(p_n[b] > 0.0 ? p_sum[b] / p_n[b] : nan);
    }
    if (!cfg.lambda_switch) return rep;

    const std::uint64_t warmup = cfg.resolved_warmup();
    const std::uint64_t sw = rep.switch_round;
    auto level = [&](std::uint64_t from, std::uint64_t to) {
        double s = 0.0, n = 0.0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::uint64_t start = b * block + 1;
            if (start >= from && start + block - 1 < to) {
                s += g_sum[b];
                n += g_n[b];
            }
        }
        return n > 0.0 ? s / n : nan;
    };
    rep.level_before = level(warmup + 1, sw);
    rep.level_after = level(sw + 3 * (cfg.horizon - sw) / 4, cfg.horizon + 1);
    const double mid = 0.5 * (rep.level_before + rep.level_after);
    const bool rising = rep.level_after > rep.level_before;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::uint64_t start = b * block + 1;
        if (start < sw || std::isnan(rep.block_percentile[b])) continue;
        const double m = rep.block_percentile[b];
        if (rising ? m >= mid : m <= mid) {
            rep.rounds_to_half_gap = start + block - 1 - sw + 1;
            break;
        }
    }
    return rep;
}

}  // namespace unending
