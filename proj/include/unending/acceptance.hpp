#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "chain.hpp"
#include "commands.hpp"
#include "equilibrium.hpp"
#include "montecarlo.hpp"
#include "values.hpp"
#include "winner.hpp"

namespace unending::acceptance {

struct Result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

inline Result named(int id, std::string name) {
    Result r;
    r.id = id;
    r.name = std::move(name);
    return r;
}

namespace detail {

inline std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

inline double poisson_oracle(double lambda, std::size_t n) {
    return std::exp(static_cast<double>(n) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(n) + 1.0));
}

inline SimConfig sim(double lambda, double delta, int mu, std::uint64_t seed) {
    SimConfig c;
    c.lambda = lambda;
    c.delta = delta;
    c.mu = mu;
    c.dist = ValueDistribution::uniform();
    c.warmup = 10'000;
    c.horizon = 10'000 + 1'000'000;
    c.seed = seed;
    return c;
}

struct EquilibriumCase {
    double lambda;
    double delta;
    ValueDistribution dist;
};

inline std::vector<EquilibriumCase> equilibrium_cases() {
    std::vector<EquilibriumCase> out;
    for (const auto& dist : {ValueDistribution::uniform(), ValueDistribution::power_law()}) {
        for (double lambda : {2.0, 5.0}) {
            for (double delta : {0.01, 0.1}) out.push_back({lambda, delta, dist});
        }
    }
    return out;
}

inline std::string label(const EquilibriumCase& c) {
    return c.dist.name() + " l=" + fmt(c.lambda) + " d=" + fmt(c.delta);
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                      std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>()) &&
           std::filesystem::file_size(a) == std::filesystem::file_size(b);
}

}  // namespace detail

/// Zero-uncertainty stationary law against p0 = 1 - l and
/// p1 = (1 - l)(e^l - 1); power iteration against the recurrence.
inline Result criterion_1() {
    auto r = named(1, "zero-uncertainty stationary distribution");
    double worst_p0 = 0.0, worst_p1 = 0.0, worst_entry = 0.0;
    for (double l : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto p = solve_stationary({l, 0.0, 1});
        const auto q = stationary_zero_uncertainty(l);
        worst_p0 = std::max(worst_p0, std::abs(p.probs[0] - (1.0 - l)));
        worst_p1 = std::max(worst_p1, std::abs(p.probs[1] - (1.0 - l) * std::expm1(l)));
        const std::size_t n = std::max(p.probs.size(), q.probs.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double a = i < p.probs.size() ? p.probs[i] : 0.0;
            const double b = i < q.probs.size() ? q.probs[i] : 0.0;
            worst_entry = std::max(worst_entry, std::abs(a - b));
        }
    }
    r.pass = worst_p0 <= 1e-10 && worst_p1 <= 1e-10 && worst_entry <= 1e-10;
    r.detail = "max|p0 err|=" + detail::fmt(worst_p0, 3) + " max|p1 err|=" + detail::fmt(worst_p1, 3) +
               " max|iteration - recurrence|=" + detail::fmt(worst_entry, 3) + " (tol 1e-10)";
    return r;
}

/// Mean pool size against both closed forms and the (2, 0.01) example.
inline Result criterion_2() {
    auto r = named(2, "mean pool size formulas");
    double worst_zero = 0.0, worst_pos = 0.0;
    for (double l : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto p = solve_stationary({l, 0.0, 1});
        const double expect = l * (2.0 - l) / (2.0 * (1.0 - l));
        worst_zero = std::max(worst_zero, std::abs(mean_pool_size(p) - expect) / expect);
    }
    double mean_2 = 0.0, p0_2 = 1.0;
    for (double l : {2.0, 5.0}) {
        for (double d : {0.01, 0.1, 0.5, 1.0}) {
            const auto p = solve_stationary({l, d, 1});
            const double expect = (l - (1.0 - p.p0()) * (1.0 - d)) / d;
            worst_pos = std::max(worst_pos, std::abs(mean_pool_size(p) - expect) / expect);
            if (l == 2.0 && d == 0.01) {
                mean_2 = mean_pool_size(p);
                p0_2 = p.p0();
            }
        }
    }
    r.pass = worst_zero <= 1e-8 && worst_pos <= 1e-8 && std::abs(mean_2 - 101.0) <= 0.5 && p0_2 < 1e-10;
    r.detail = "delta=0 rel err " + detail::fmt(worst_zero, 3) + ", delta>0 rel err " + detail::fmt(worst_pos, 3) +
               " (tol 1e-8); l=2 d=0.01: mean=" + detail::fmt(mean_2, 8) + " p0=" + detail::fmt(p0_2, 4);
    return r;
}

/// delta = 1 leaves exactly the round's arrivals: Poisson(lambda).
inline Result criterion_3() {
    auto r = named(3, "delta=1 Poisson closed form");
    double worst = 0.0;
    for (double l : {0.5, 2.0, 5.0}) {
        const auto p = solve_stationary({l, 1.0, 1});
        for (std::size_t n = 0; n < p.probs.size() + 40; ++n) {
            const double got = n < p.probs.size() ? p.probs[n] : 0.0;
            worst = std::max(worst, std::abs(got - detail::poisson_oracle(l, n)));
        }
    }
    r.pass = worst <= 1e-12;
    r.detail = "sup-norm " + detail::fmt(worst, 3) + " (tol 1e-12)";
    return r;
}

inline Result criterion_4() {
    auto r = named(4, "posted-price emergence (simulation)");
    auto c = detail::sim(2.0, 0.0, 1, 4);
    c.bid_source = BidSource::PostedPrice;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = simulate(c);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double below = static_cast<double>(rep.winners_below_threshold) / static_cast<double>(rep.winners);
    r.pass = std::abs(rep.price_mean - 0.5) <= 0.005 && below < 0.01 && secs < 60.0;
    r.detail = "mean price " + detail::fmt(rep.price_mean, 8) + " (0.5 +- 0.005), winners below 0.5: " +
               detail::fmt(below, 4) + " (< 0.01), run " + detail::fmt(secs, 3) + " s (< 60)";
    return r;
}

inline Result criterion_5() {
    auto r = named(5, "solver vs simulation TV distance");
    auto a = detail::sim(2.0, 0.01, 1, 5);
    a.bid_source = BidSource::ValuesOnly;
    const double tv_a = empirical_vs_solver(simulate(a), solve_stationary({2.0, 0.01, 1}));
    auto b = detail::sim(0.5, 0.0, 1, 55);
    const double tv_b = empirical_vs_solver(simulate(b), stationary_zero_uncertainty(0.5));
    r.pass = tv_a < 0.02 && tv_b < 0.02;
    r.detail = "TV(l=2,d=0.01)=" + detail::fmt(tv_a, 4) + " TV(l*=0.5,d=0)=" + detail::fmt(tv_b, 4) + " (< 0.02)";
    return r;
}

inline Result criterion_6() {
    auto r = named(6, "time to win");
    auto c = detail::sim(2.0, 0.0, 1, 6);
    c.horizon = 10'000 + 100'000;
    c.probes = {{0.9, 0, 10'000}};
    const auto s = probe_time_to_win(c).front();
    const double target = 1.0 / (1.0 - 2.0 * (1.0 - 0.9));
    const double z = s.rounds_se > 0.0 ? (s.mean_rounds - target) / s.rounds_se : 0.0;
    r.pass = s.wins == s.replications && std::abs(s.mean_rounds - target) <= 3.0 * s.rounds_se;
    r.detail = "mean rounds " + detail::fmt(s.mean_rounds, 6) + " +- " + detail::fmt(s.rounds_se, 3) + " (SE) vs " +
               detail::fmt(target, 6) + ": " + detail::fmt(z, 3) + " SE (limit 3); wins " + std::to_string(s.wins) + "/" +
               std::to_string(s.replications);
    return r;
}

inline Result criterion_7() {
    auto r = named(7, "bidding ODE residual");
    r.pass = true;
    std::string worst;
    double worst_frac = 1.0;
    for (const auto& c : detail::equilibrium_cases()) {
        const auto curve = build_winner_curve(c.lambda, c.delta, 1, kDefaultGridPoints);
        auto bid = bid_with_uncertainty(c.dist, curve);
        const double frac = ode_residual(bid, curve).fraction_below(1e-3);
        if (frac < worst_frac) {
            worst_frac = frac;
            worst = detail::label(c);
        }
        r.pass = r.pass && frac >= 0.95;
    }
    r.detail = "lowest fraction of interior points with residual < 1e-3: " + detail::fmt(worst_frac, 5) + " (" + worst +
               "; need >= 0.95)";
    return r;
}

inline Result criterion_8() {
    auto r = named(8, "one-round deviation optimality");
    r.pass = true;
    double worst_ratio = 0.0;
    std::string worst;
    for (const auto& c : detail::equilibrium_cases()) {
        const auto bid = bid_with_uncertainty(c.dist, build_winner_curve(c.lambda, c.delta, 1, kDefaultGridPoints));
        std::vector<double> xs;
        const std::size_t n = bid.size();
        for (std::size_t k = 0; k < 20; ++k) xs.push_back(bid.x[1 + k * (n - 3) / 19]);
        const auto rep = best_response_check(bid, xs);
        for (const auto& s : rep.samples) {
            const double ratio = s.value_gap / std::max(s.Z, 1e-6);
            if (ratio >= worst_ratio) {
                worst_ratio = ratio;
                worst = detail::label(c) + " x=" + detail::fmt(s.x, 5);
            }
        }
        r.pass = r.pass && rep.pass();
    }
    r.detail = "worst value gap / max(Z, 1e-6) = " + detail::fmt(worst_ratio, 3) + " at " + worst + " (< 1e-4)";
    return r;
}

inline Result criterion_9() {
    auto r = named(9, "comparative statics in delta");
    const auto rep = uncertainty_comparatives(ValueDistribution::uniform(), 2.0, {0.002, 0.01, 0.05});
    bool argmax_ok = true;
    std::string gaps;
    for (const auto& e : rep.entries) {
        argmax_ok = argmax_ok && std::abs(e.gap_argmax_x - 0.5) <= rep.grid_step * (1.0 + 1e-9);
        gaps += (gaps.empty() ? "" : ", ") + detail::fmt(e.gap_argmax_x, 6);
    }
    r.pass = rep.pass() && argmax_ok;
    r.detail = std::string("b<=b0: ") + (rep.bids_below_baseline ? "yes" : "no") + ", Z>=0: " +
               (rep.expectation_nonnegative ? "yes" : "no") + ", Z>=Z0: " + (rep.expectation_above_baseline ? "yes" : "no") +
               ", b nonincreasing in delta: " + (rep.bids_nonincreasing_in_delta ? "yes" : "no") + ", gap argmax x = {" +
               gaps + "} (0.5 +- " + detail::fmt(rep.grid_step, 3) + "), X* estimate " + detail::fmt(rep.x_star, 6) +
               (rep.first_violation.empty() ? "" : "; " + rep.first_violation);
    return r;
}

/// Sup-norm distance to the posted-price bid outside the percentile band
/// [0.45, 0.55].
inline double posted_price_distance(double delta) {
    const auto dist = ValueDistribution::uniform();
    const auto bid = bid_with_uncertainty(dist, build_winner_curve(2.0, delta, 1, kDefaultGridPoints));
    double worst = 0.0;
    for (std::size_t i = 0; i < bid.size(); ++i) {
        if (bid.g[i] >= 0.45 && bid.g[i] <= 0.55) continue;
        worst = std::max(worst, std::abs(bid.b[i] - std::min(bid.x[i], 0.5)));
    }
    return worst;
}

inline Result criterion_10() {
    auto r = named(10, "delta -> 0 consistency");
    const double d1 = posted_price_distance(0.05), d2 = posted_price_distance(0.01), d3 = posted_price_distance(0.002);
    r.pass = d1 > d2 && d2 > d3;
    r.detail = "sup distance at delta 0.05/0.01/0.002: " + detail::fmt(d1, 5) + " / " + detail::fmt(d2, 5) + " / " +
               detail::fmt(d3, 5) + " (strictly decreasing)";
    return r;
}

inline Result criterion_11() {
    auto r = named(11, "multiple winners");
    auto c = detail::sim(5.0, 0.0, 2, 11);
    c.bid_source = BidSource::PostedPrice;
    const auto rep = simulate(c);
    double worst_residual = 0.0;
    for (const ChainParams p : {ChainParams{0.5, 0.0, 2}, ChainParams{1.5, 0.0, 2}, ChainParams{5.0, 0.01, 2}}) {
        const auto s = solve_stationary(p);
        worst_residual = std::max(worst_residual, l1_distance(s, apply_transition(s, p)));
    }
    bool reduces = true;
    for (double l : {0.3, 0.8}) {
        const auto s = solve_stationary({l, 0.0, 1});
        double sum = 0.0;
        for (int j = 0; j < 1; ++j) sum += (1.0 - j / 1.0) * s.probs[static_cast<std::size_t>(j)];
        reduces = reduces && sum == s.p0() && winner_fraction_from_pool(s, 1) == s.p0();
    }
    r.pass = std::abs(rep.price_mean - 0.6) <= 0.005 && worst_residual < 1e-12 && reduces;
    r.detail = "mean price " + detail::fmt(rep.price_mean, 8) + " (0.6 +- 0.005), mu=2 fixed-point residual " +
               detail::fmt(worst_residual, 3) + " (< 1e-12), mu=1 reduction exact: " + (reduces ? "yes" : "no");
    return r;
}

inline Result criterion_12() {
    auto r = named(12, "winner-value autocorrelation");
    auto c = detail::sim(2.0, 0.01, 1, 12);
    c.bid_source = BidSource::ValuesOnly;
    const auto rep = simulate(c);
    const auto rho = winner_autocorrelation(rep, 200);
    const double band = 3.0 / std::sqrt(static_cast<double>(rep.winner_series.size()));
    std::size_t first = 0;
    for (std::size_t k = 1; k < rho.size(); ++k) {
        if (std::abs(rho[k]) < band) {
            first = k;
            break;
        }
    }
    r.pass = rho[1] > band && first != 0 && first <= 200;
    r.detail = "lag-1 " + detail::fmt(rho[1], 4) + " vs 3/sqrt(n)=" + detail::fmt(band, 3) + ", first lag inside band: " +
               (first ? std::to_string(first) : std::string("none by 200"));
    return r;
}

/// Runs each command twice into separate directories and compares bytes.
inline Result criterion_13() {
    auto r = named(13, "determinism");
    const auto root = std::filesystem::temp_directory_path() / "unending-determinism";
    std::filesystem::remove_all(root);
    std::size_t compared = 0;
    bool same = true;
    std::string mismatch;
    auto run = [&](const std::string& tag, Scenario s, const std::function<CommandOutput(const Scenario&)>& cmd) {
        s.out = (root / (tag + "-a")).string();
        const auto a = cmd(s);
        s.out = (root / (tag + "-b")).string();
        const auto b = cmd(s);
        for (std::size_t i = 0; i < a.files.size(); ++i) {
            ++compared;
            if (i >= b.files.size() || a.files[i].filename() != b.files[i].filename() || !detail::same_bytes(a.files[i], b.files[i])) {
                same = false;
                if (mismatch.empty()) mismatch = a.files[i].filename().string();
            }
        }
    };
    Scenario s;
    s.lambda = 2.0;
    s.delta = 0.01;
    run("stationary", s, cmd_stationary);
    run("winner", s, cmd_winner_curve);
    run("bid", s, cmd_bid_curve);
    Scenario sim = s;
    sim.rounds = 100'000;
    sim.trace = true;
    sim.probes = {{0.45, 0, 200}};
    run("simulate", sim, cmd_simulate);
    std::filesystem::remove_all(root);
    r.pass = same && compared > 0;
    r.detail = std::to_string(compared) + " files compared" + (mismatch.empty() ? "" : ", first mismatch " + mismatch);
    return r;
}

struct Criterion {
    int id;
    Result (*run)();
};

inline const std::vector<Criterion>& all_criteria() {
    static const std::vector<Criterion> list{
        {1, criterion_1}, {2, criterion_2},   {3, criterion_3},   {4, criterion_4},   {5, criterion_5},
        {6, criterion_6}, {7, criterion_7},   {8, criterion_8},   {9, criterion_9},   {10, criterion_10},
        {11, criterion_11}, {12, criterion_12}, {13, criterion_13},
    };
    return list;
}

/// "all", "zero-uncertainty", "chain", "simulation", "equilibrium",
/// "determinism", or a comma-separated list of criterion numbers.
inline std::vector<int> suite(const std::string& name) {
    if (name == "all" || name.empty()) return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
    if (name == "zero-uncertainty") return {1, 4, 6, 11};
    if (name == "chain") return {1, 2, 3};
    if (name == "simulation") return {4, 5, 6, 11, 12};
    if (name == "equilibrium") return {7, 8, 9, 10};
    if (name == "determinism") return {13};
    std::vector<int> ids;
    std::stringstream ss(name);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int id = 0;
        try {
            id = std::stoi(item, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != item.size() || id < 1 || id > 13) throw InvalidArgument("unknown suite or criterion '" + item + "'");
        ids.push_back(id);
    }
    if (ids.empty()) throw InvalidArgument("empty suite");
    return ids;
}

/// Runs the criteria, printing one line each as it finishes. A criterion
/// that throws counts as a failure.
inline std::vector<Result> run(const std::vector<int>& ids, std::ostream& out) {
    std::vector<Result> results;
    for (int id : ids) {
        const auto& c = all_criteria().at(static_cast<std::size_t>(id - 1));
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = named(id, "criterion " + std::to_string(id));
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << " ("
            << detail::fmt(r.seconds, 3) << " s)" << std::endl;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace unending::acceptance
