#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "chain.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "montecarlo.hpp"
#include "values.hpp"
#include "winner.hpp"

namespace unending {

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    Json results;
};

namespace detail {

inline Json metadata(const std::string& command, const Json& config, Json results) {
    return Json{{"command", command}, {"config", config}, {"results", std::move(results)}};
}

inline std::filesystem::path prepare_out(const Scenario& s) {
    std::filesystem::path dir(s.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InvalidArgument("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

inline std::string regime_explanation(const ChainParams& p) {
    switch (classify_regime(p)) {
        case Regime::Transient:
            return "arrivals (" + format_double(p.lambda_star) + " per round) outpace the " + std::to_string(p.mu) +
                   " winner(s) per round and nobody leaves, so the pool grows without bound";
        case Regime::NullRecurrent:
            return "arrivals exactly match winners and nobody leaves; the pool returns to empty but has no steady state";
        case Regime::PositiveRecurrent: return "positive recurrent";
    }
    return {};
}

inline BidSource parse_bid_source(const std::string& s) {
    if (s == "auto") return BidSource::Automatic;
    if (s == "posted") return BidSource::PostedPrice;
    if (s == "curve") return BidSource::Curve;
    if (s == "values") return BidSource::ValuesOnly;
    throw InvalidArgument("unknown bid source '" + s + "'");
}

inline std::vector<std::uint64_t> index_column(std::size_t n) {
    std::vector<std::uint64_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace detail

/// Stationary pool distribution: (n, p_n) CSV plus JSON summary.
inline CommandOutput cmd_stationary(const Scenario& s) {
    s.validate();
    const ChainParams params{s.lambda, s.delta, s.mu};
    if (classify_regime(params) != Regime::PositiveRecurrent) {
        throw NonErgodic(to_string(classify_regime(params)) + " chain (lambda*=" + format_double(s.lambda) + ", delta=" +
                         format_double(s.delta) + ", mu=" + std::to_string(s.mu) + "): " + detail::regime_explanation(params));
    }
    const auto p = solve_stationary(params, s.solve_options());
    const Json config = to_json(s);
    const auto dir = detail::prepare_out(s);
    const auto stem = output_stem("stationary", config);
    CommandOutput out;
    out.results = to_json(p);
    if (s.mu == 1) out.results["mean_closed"] = mean_closed(params, p.p0());
    CsvTable().column("n", detail::index_column(p.probs.size())).column("p_n", p.probs).write(dir / (stem + ".csv"), config);
    write_json(dir / (stem + ".json"), detail::metadata("stationary", config, out.results));
    out.files = {dir / (stem + ".csv"), dir / (stem + ".json")};
    return out;
}

/// Winner cdf, density and success probability on a uniform percentile grid.
inline CommandOutput cmd_winner_curve(const Scenario& s) {
    s.validate();
    WinnerOptions opt;
    opt.solve = s.solve_options();
    const auto c = build_winner_curve(s.lambda, s.delta, s.mu, s.g_points, opt);
    const Json config = to_json(s);
    const auto dir = detail::prepare_out(s);
    const auto stem = output_stem("winner-curve", config);
    CommandOutput out;
    out.results = Json{{"regime", to_string(classify_regime({s.lambda, s.delta, s.mu}))},
                       {"points", c.size()},
                       {"W0", c.W.front()},
                       {"log_W0", c.log_W.front()},
                       {"density_integral_defect", density_integral_defect(c)},
                       {"max_clip", c.max_clip}};
    CsvTable().column("g", c.g).column("W", c.W).column("log_W", c.log_W).column("w", c.w).column("H", c.H).write(
        dir / (stem + ".csv"), config);
    write_json(dir / (stem + ".json"), detail::metadata("winner-curve", config, out.results));
    out.files = {dir / (stem + ".csv"), dir / (stem + ".json")};
    return out;
}

/// Equilibrium bids and expectations: columns x, g, b, Z, W, H.
inline CommandOutput cmd_bid_curve(const Scenario& s) {
    s.validate();
    const auto dist = parse_distribution(s.dist);
    BidCurve bid;
    Json results;
    if (s.lambda > s.mu) results["threshold"] = threshold_value(dist, s.lambda, s.mu);
    if (s.delta == 0.0) {
        bid = bid_curve_zero_uncertainty(dist, s.lambda, s.mu, numerics::uniform_grid(s.g_points));
    } else {
        WinnerOptions opt;
        opt.solve = s.solve_options();
        const auto curve = build_winner_curve(s.lambda, s.delta, s.mu, s.g_points, opt);
        bid = bid_with_uncertainty(dist, curve, {s.experimental_mu});
        if (bid.size() >= kMinDensityGridPoints) {
            const auto rep = ode_residual(bid, curve);
            results["ode_residual_max"] = rep.max;
            results["ode_fraction_below_1e-3"] = rep.fraction_below(1e-3);
        }
        std::size_t underflow = 0;
        for (char u : bid.underflow) underflow += u ? 1 : 0;
        results["underflow_points"] = underflow;
        if (s.mu > 1) results["experimental"] = true;
    }
    if (s.x_points > 0) bid = resample(bid, numerics::uniform_grid(s.x_points, bid.x.front(), bid.x.back()));
    results["points"] = bid.size();

    const Json config = to_json(s);
    const auto dir = detail::prepare_out(s);
    const auto stem = output_stem("bid-curve", config);
    CsvTable()
        .column("x", bid.x)
        .column("g", bid.g)
        .column("b", bid.b)
        .column("Z", bid.Z)
        .column("W", bid.W)
        .column("H", bid.H)
        .write(dir / (stem + ".csv"), config);
    write_json(dir / (stem + ".json"), detail::metadata("bid-curve", config, results));
    CommandOutput out;
    out.results = std::move(results);
    out.files = {dir / (stem + ".csv"), dir / (stem + ".json")};
    return out;
}

inline SimConfig make_sim_config(const Scenario& s) {
    SimConfig c;
    c.lambda = s.lambda;
    c.delta = s.delta;
    c.mu = s.mu;
    c.dist = parse_distribution(s.dist);
    c.warmup = s.resolved_warmup();
    c.horizon = *c.warmup + s.rounds;
    c.seed = s.seed;
    c.bid_source = detail::parse_bid_source(s.bid_source);
    c.pool_cap = s.pool_cap;
    c.prune_floor = s.prune_floor;
    c.autocorr_lags = s.autocorr_lags;
    if (s.switch_round) c.lambda_switch = LambdaSwitch{*s.switch_round, *s.switch_lambda, nullptr};
    if (c.bid_source == BidSource::Curve) {
        if (!(s.delta > 0.0) || s.mu != 1) throw InvalidArgument("bid source 'curve' needs delta > 0 and mu = 1");
        c.bid_curve = std::make_shared<const BidCurve>(
            bid_with_uncertainty(c.dist, build_winner_curve(s.lambda, s.delta, 1, s.g_points)));
        if (c.lambda_switch) {
            c.lambda_switch->bid_after = std::make_shared<const BidCurve>(
                bid_with_uncertainty(c.dist, build_winner_curve(c.lambda_switch->lambda, s.delta, 1, s.g_points)));
        }
    }
    return c;
}

/// One long run (histograms to CSV, summary to JSON), probe replications
/// when probes are configured, block trajectories when lambda switches.
inline CommandOutput cmd_simulate(const Scenario& s) {
    s.validate();
    auto cfg = make_sim_config(s);
    const Json config = to_json(s);
    const auto dir = detail::prepare_out(s);
    const auto stem = output_stem("simulate", config);
    CommandOutput out;

    std::ofstream trace;
    if (s.trace) {
        const auto path = dir / (stem + "-trace.csv");
        trace.open(path, std::ios::binary);
        if (!trace) throw InvalidArgument("cannot write " + path.string());
        trace << "# config=" << config.dump() << '\n';
        cfg.trace = &trace;
        out.files.push_back(path);
    }

    SimReport rep;
    Json results;
    if (cfg.lambda_switch) {
        const auto r = regime_switch_experiment(cfg);
        rep = r.sim;
        CsvTable()
            .column("round", r.block_start)
            .column("winner_percentile", r.block_percentile)
            .column("price", r.block_price)
            .write(dir / (stem + "-regime.csv"), config);
        out.files.push_back(dir / (stem + "-regime.csv"));
        results["regime_switch"] = Json{{"lambda_before", r.lambda_before},
                                        {"lambda_after", r.lambda_after},
                                        {"switch_round", r.switch_round},
                                        {"block", r.block},
                                        {"level_before", r.level_before},
                                        {"level_after", r.level_after},
                                        {"rounds_to_half_gap", detail::optional_json(r.rounds_to_half_gap)}};
    } else {
        rep = simulate(cfg);
    }
    cfg.trace = nullptr;
    results["report"] = to_json(rep);
    if (!s.probes.empty()) {
        auto probe_cfg = cfg;
        probe_cfg.lambda_switch.reset();
        probe_cfg.probes = s.probes;
        Json probes = Json::array();
        for (const auto& p : probe_time_to_win(probe_cfg)) probes.push_back(to_json(p));
        results["probe_replications"] = probes;
    }

    CsvTable()
        .column("n", detail::index_column(rep.pool_histogram.size()))
        .column("count", rep.pool_histogram)
        .write(dir / (stem + "-pool.csv"), config);
    std::vector<double> lower(rep.winner_histogram.size());
    for (std::size_t i = 0; i < lower.size(); ++i) lower[i] = static_cast<double>(i) / static_cast<double>(lower.size());
    CsvTable()
        .column("bucket", detail::index_column(lower.size()))
        .column("g_lo", lower)
        .column("count", rep.winner_histogram)
        .write(dir / (stem + "-winners.csv"), config);
    write_json(dir / (stem + ".json"), detail::metadata("simulate", config, results));
    out.files.push_back(dir / (stem + "-pool.csv"));
    out.files.push_back(dir / (stem + "-winners.csv"));
    out.files.push_back(dir / (stem + ".json"));
    out.results = std::move(results);
    return out;
}

/// Regime name of the chain (lambda, delta, mu).
inline std::string cmd_regime(const Scenario& s) {
    const ChainParams p{s.lambda, s.delta, s.mu};
    p.validate();
    return to_string(classify_regime(p));
}

}  // namespace unending
