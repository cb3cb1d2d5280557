// Command-line front end: one command per invocation.
//
// Exit codes: 0 success, 1 invalid input (including chains with no steady
// state), 2 numerical failure, 3 failed verification.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unending/acceptance.hpp"
#include "unending/commands.hpp"

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<double> lambda;
    std::optional<double> delta;
    std::optional<int> mu;
    std::optional<std::string> dist;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> rounds;
    std::optional<std::uint64_t> warmup;
    std::optional<std::string> out;
    std::optional<std::size_t> g_points;
    std::optional<std::size_t> x_points;
    std::optional<double> tol;
    std::optional<double> tail_tol;
    std::optional<std::size_t> max_iterations;
    std::optional<std::string> bid_source;
    std::optional<std::size_t> pool_cap;
    std::optional<double> prune_floor;
    std::vector<double> probes;
    std::optional<std::uint64_t> replications;
    std::optional<std::uint64_t> switch_round;
    std::optional<double> switch_lambda;
    std::optional<std::size_t> lags;
    bool experimental_mu = false;
    bool trace = false;
};

void add_model_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "Scenario JSON (flags override its fields)");
    app->add_option("--lambda", f.lambda, "Arrival mean per round");
    app->add_option("--delta", f.delta, "Per-round removal probability");
    app->add_option("--mu", f.mu, "Items (winners) per round");
    app->add_option("--dist", f.dist, "uniform | uniform:LO:HI | powerlaw | table:PATH");
    app->add_option("--g-points", f.g_points, "Percentile grid size");
    app->add_option("--tol", f.tol, "Stationary solver tolerance");
    app->add_option("--tail-tol", f.tail_tol, "Truncated tail mass tolerance");
    app->add_option("--max-iterations", f.max_iterations, "Stationary solver iteration cap");
    app->add_option("--out", f.out, "Output directory");
}

void add_sim_flags(CLI::App* app, Flags& f) {
    app->add_option("--seed", f.seed, "Random seed");
    app->add_option("--rounds", f.rounds, "Measured rounds after warmup");
    app->add_option("--warmup", f.warmup, "Warmup rounds (default max(1e4, 20/delta))");
    app->add_option("--bid-source", f.bid_source, "auto | posted | curve | values");
    app->add_option("--pool-cap", f.pool_cap, "Abort when the pool exceeds this many bidders");
    app->add_option("--prune-floor", f.prune_floor, "Drop arrivals valued below this");
    app->add_option("--probe", f.probes, "Track a bidder of this value (repeatable)");
    app->add_option("--replications", f.replications, "Replications per probe");
    app->add_option("--switch-round", f.switch_round, "Round at which lambda changes");
    app->add_option("--switch-lambda", f.switch_lambda, "Arrival mean after the switch");
    app->add_option("--lags", f.lags, "Autocorrelation lags");
    app->add_flag("--trace", f.trace, "Write per-round (round, pool size, winner value, price) CSV");
}

template <class T>
void apply(const std::optional<T>& flag, T& field) {
    if (flag) field = *flag;
}

unending::Scenario resolve(const Flags& f) {
    unending::Scenario s = f.config ? unending::load_scenario(*f.config) : unending::Scenario{};
    apply(f.lambda, s.lambda);
    apply(f.delta, s.delta);
    apply(f.mu, s.mu);
    apply(f.dist, s.dist);
    apply(f.seed, s.seed);
    apply(f.rounds, s.rounds);
    if (f.warmup) s.warmup = *f.warmup;
    apply(f.out, s.out);
    apply(f.g_points, s.g_points);
    apply(f.x_points, s.x_points);
    apply(f.tol, s.tol);
    apply(f.tail_tol, s.tail_tol);
    apply(f.max_iterations, s.max_iterations);
    apply(f.bid_source, s.bid_source);
    apply(f.pool_cap, s.pool_cap);
    if (f.prune_floor) s.prune_floor = *f.prune_floor;
    if (!f.probes.empty()) {
        s.probes.clear();
        for (double v : f.probes) s.probes.push_back({v, 0, f.replications.value_or(1000)});
    } else if (f.replications) {
        for (auto& p : s.probes) p.replications = *f.replications;
    }
    if (f.switch_round) s.switch_round = *f.switch_round;
    if (f.switch_lambda) s.switch_lambda = *f.switch_lambda;
    apply(f.lags, s.autocorr_lags);
    if (f.experimental_mu) s.experimental_mu = true;
    if (f.trace) s.trace = true;
    s.validate();
    return s;
}

void print_files(const unending::CommandOutput& out) {
    for (const auto& p : out.files) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady states of unending sequential first-price auctions"};
    app.require_subcommand(1);
    Flags f;
    std::string suite = "all";

    auto* stationary = app.add_subcommand("stationary", "Stationary pool-size distribution");
    add_model_flags(stationary, f);
    auto* winner = app.add_subcommand("winner-curve", "Winner cdf, density and success probability");
    add_model_flags(winner, f);
    auto* bid = app.add_subcommand("bid-curve", "Equilibrium bids and bidder expectations");
    add_model_flags(bid, f);
    bid->add_option("--x-points", f.x_points, "Resample onto a uniform value grid of this size");
    bid->add_flag("--experimental-mu", f.experimental_mu, "Allow mu > 1 with delta > 0 (unverified)");
    auto* simulate = app.add_subcommand("simulate", "Round-by-round Monte Carlo");
    add_model_flags(simulate, f);
    add_sim_flags(simulate, f);
    auto* regime = app.add_subcommand("regime", "Recurrence class of the pool chain");
    add_model_flags(regime, f);
    auto* verify = app.add_subcommand("verify", "Run acceptance criteria");
    verify->add_option("suite", suite,
                       "all | zero-uncertainty | chain | simulation | equilibrium | determinism | comma-separated numbers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (verify->parsed()) {
            const auto results = unending::acceptance::run(unending::acceptance::suite(suite), std::cout);
            for (const auto& r : results) {
                if (!r.pass) {
                    std::cerr << "verification failed: criterion " << r.id << " (" << r.name << ")\n";
                    return 3;
                }
            }
            return 0;
        }
        const auto s = resolve(f);
        if (regime->parsed()) std::cout << unending::cmd_regime(s) << '\n';
        else if (stationary->parsed()) print_files(unending::cmd_stationary(s));
        else if (winner->parsed()) print_files(unending::cmd_winner_curve(s));
        else if (bid->parsed()) print_files(unending::cmd_bid_curve(s));
        else if (simulate->parsed()) print_files(unending::cmd_simulate(s));
        return 0;
    } catch (const unending::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const unending::ThresholdUndefined& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const unending::NonErgodic& e) {
        std::cerr << "NonErgodic: " << e.what() << '\n';
        return 1;
    } catch (const unending::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}
