#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chain.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "montecarlo.hpp"
#include "winner.hpp"

namespace unending {

using Json = nlohmann::json;

/// Everything a command needs. Defaults < --config file < flags.
struct Scenario {
    std::string dist = "uniform";
    double lambda = 2.0;
    double delta = 0.01;
    int mu = 1;
    std::size_t g_points = kDefaultGridPoints;
    /// 0 keeps the percentile grid for bid curves; otherwise a uniform x grid.
    std::size_t x_points = 0;
    double tol = 1e-12;
    double tail_tol = 1e-12;
    std::size_t max_iterations = 1'000'000;
    std::uint64_t seed = 1;
    /// Measured rounds; the horizon is warmup + rounds.
    std::uint64_t rounds = 1'000'000;
    std::optional<std::uint64_t> warmup;
    std::string bid_source = "auto";
    std::size_t pool_cap = 10'000'000;
    std::optional<double> prune_floor;
    std::vector<Probe> probes;
    std::optional<std::uint64_t> switch_round;
    std::optional<double> switch_lambda;
    std::size_t autocorr_lags = 200;
    bool experimental_mu = false;
    bool trace = false;
    /// Output directory; not part of the config hash.
    std::string out = ".";

    SolveOptions solve_options() const { return {tol, tail_tol, max_iterations}; }

    std::uint64_t resolved_warmup() const {
        if (warmup) return *warmup;
        SimConfig c;
        c.delta = delta;
        return c.resolved_warmup();
    }

    void validate() const {
        ChainParams{lambda, delta, mu}.validate();
        parse_distribution(dist);
        if (g_points < 2) throw InvalidArgument("g_points must be >= 2");
        if (x_points == 1) throw InvalidArgument("x_points must be 0 or >= 2");
        if (!(tol > 0.0) || !(tail_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
        if (max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
        if (rounds == 0) throw InvalidArgument("rounds must be positive");
        if (switch_round.has_value() != switch_lambda.has_value()) {
            throw InvalidArgument("switch_round and switch_lambda go together");
        }
        if (bid_source != "auto" && bid_source != "posted" && bid_source != "curve" && bid_source != "values") {
            throw InvalidArgument("bid_source must be auto, posted, curve or values");
        }
    }
};

namespace detail {

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) out.reset();
    else out = j.at(key).get<T>();
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Resolved scenario as JSON, warmup filled in. `out` is left out.
inline Json to_json(const Scenario& s) {
    Json probes = Json::array();
    for (const auto& p : s.probes) {
        probes.push_back({{"value", p.value}, {"insert_round", p.insert_round}, {"replications", p.replications}});
    }
    return Json{
        {"dist", s.dist},
        {"lambda", s.lambda},
        {"delta", s.delta},
        {"mu", s.mu},
        {"g_points", s.g_points},
        {"x_points", s.x_points},
        {"tol", s.tol},
        {"tail_tol", s.tail_tol},
        {"max_iterations", s.max_iterations},
        {"seed", s.seed},
        {"rounds", s.rounds},
        {"warmup", s.resolved_warmup()},
        {"bid_source", s.bid_source},
        {"pool_cap", s.pool_cap},
        {"prune_floor", detail::optional_json(s.prune_floor)},
        {"probes", probes},
        {"switch_round", detail::optional_json(s.switch_round)},
        {"switch_lambda", detail::optional_json(s.switch_lambda)},
        {"autocorr_lags", s.autocorr_lags},
        {"experimental_mu", s.experimental_mu},
        {"trace", s.trace},
    };
}

/// Applies the keys present in `j` on top of `s`. Accepts a bare scenario
/// or a metadata file written by a command (scenario under "config").
inline void merge_json(Scenario& s, const Json& doc) {
    const Json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
    if (!j.is_object()) throw InvalidArgument("scenario config must be a JSON object");
    static const char* known[] = {"dist",  "lambda",      "delta",       "mu",           "g_points",   "x_points",
                                  "tol",   "tail_tol",    "max_iterations", "seed",      "rounds",     "warmup",
                                  "bid_source", "pool_cap", "prune_floor", "probes",     "switch_round", "switch_lambda",
                                  "autocorr_lags", "experimental_mu", "trace", "out"};
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
            throw InvalidArgument("unknown config key '" + key + "'");
        }
    }
    try {
        detail::read(j, "dist", s.dist);
        detail::read(j, "lambda", s.lambda);
        detail::read(j, "delta", s.delta);
        detail::read(j, "mu", s.mu);
        detail::read(j, "g_points", s.g_points);
        detail::read(j, "x_points", s.x_points);
        detail::read(j, "tol", s.tol);
        detail::read(j, "tail_tol", s.tail_tol);
        detail::read(j, "max_iterations", s.max_iterations);
        detail::read(j, "seed", s.seed);
        detail::read(j, "rounds", s.rounds);
        detail::read_optional(j, "warmup", s.warmup);
        detail::read(j, "bid_source", s.bid_source);
        detail::read(j, "pool_cap", s.pool_cap);
        detail::read_optional(j, "prune_floor", s.prune_floor);
        detail::read_optional(j, "switch_round", s.switch_round);
        detail::read_optional(j, "switch_lambda", s.switch_lambda);
        detail::read(j, "autocorr_lags", s.autocorr_lags);
        detail::read(j, "experimental_mu", s.experimental_mu);
        detail::read(j, "trace", s.trace);
        detail::read(j, "out", s.out);
        if (j.contains("probes")) {
            s.probes.clear();
            for (const auto& p : j.at("probes")) {
                Probe probe;
                probe.value = p.at("value").get<double>();
                if (p.contains("insert_round")) probe.insert_round = p.at("insert_round").get<std::uint64_t>();
                if (p.contains("replications")) probe.replications = p.at("replications").get<std::uint64_t>();
                s.probes.push_back(probe);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad config value: ") + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config " + path + " is not valid JSON: " + e.what());
    }
    Scenario s;
    merge_json(s, j);
    return s;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// "<command>-<16 hex digits of the config hash>".
inline std::string output_stem(const std::string& command, const Json& config) {
    std::ostringstream os;
    os << command << '-' << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(config.dump());
    return os.str();
}

/// Column-major CSV. The first line is "# config=<json>".
class CsvTable {
public:
    CsvTable& column(std::string name, const std::vector<double>& values) {
        std::vector<std::string> text;
        text.reserve(values.size());
        for (double v : values) text.push_back(format_double(v));
        return add(std::move(name), std::move(text));
    }

    CsvTable& column(std::string name, const std::vector<std::uint64_t>& values) {
        std::vector<std::string> text;
        text.reserve(values.size());
        for (auto v : values) text.push_back(std::to_string(v));
        return add(std::move(name), std::move(text));
    }

    void write(const std::filesystem::path& path, const Json& config) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InvalidArgument("cannot write " + path.string());
        write(out, config);
    }

    void write(std::ostream& out, const Json& config) const {
        out << "# config=" << config.dump() << '\n';
        for (std::size_t c = 0; c < names_.size(); ++c) out << (c ? "," : "") << names_[c];
        out << '\n';
        const std::size_t rows = cols_.empty() ? 0 : cols_.front().size();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols_.size(); ++c) out << (c ? "," : "") << cols_[c][r];
            out << '\n';
        }
    }

private:
    CsvTable& add(std::string name, std::vector<std::string> text) {
        if (!cols_.empty() && text.size() != cols_.front().size()) throw InvalidArgument("CSV columns differ in length");
        names_.push_back(std::move(name));
        cols_.push_back(std::move(text));
        return *this;
    }

    std::vector<std::string> names_;
    std::vector<std::vector<std::string>> cols_;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline Json to_json(const PoolDistribution& p) {
    return Json{
        {"lambda_star", p.params.lambda_star},
        {"delta", p.params.delta},
        {"mu", p.params.mu},
        {"regime", to_string(classify_regime(p.params))},
        {"p0", p.p0()},
        {"log_p0", p.log_p0},
        {"mean", mean_pool_size(p)},
        {"n_max", p.n_max},
        {"tail_mass", p.tail_mass},
        {"residual", p.residual},
        {"iterations", p.iterations},
    };
}

inline Json to_json(const ProbeStats& s) {
    return Json{
        {"value", s.value},         {"replications", s.replications}, {"wins", s.wins},
        {"removed", s.removed},     {"unresolved", s.unresolved},     {"success_rate", s.success_rate},
        {"success_se", s.success_se}, {"mean_rounds", s.mean_rounds}, {"rounds_se", s.rounds_se},
    };
}

/// Summary statistics of a report; the histograms go to CSV.
inline Json to_json(const SimReport& r) {
    Json probes = Json::array();
    for (const auto& p : r.probes) probes.push_back(to_json(p));
    return Json{
        {"lambda", r.lambda},
        {"delta", r.delta},
        {"mu", r.mu},
        {"seed", r.seed},
        {"rounds_simulated", r.rounds_simulated},
        {"warmup", r.warmup},
        {"bid_source", r.bid_source},
        {"winners", r.winners},
        {"winners_below_threshold", r.winners_below_threshold},
        {"threshold", detail::optional_json(r.threshold)},
        {"price_count", r.price_count},
        {"price_mean", r.price_mean},
        {"price_std", r.price_std},
        {"price_se", r.price_se},
        {"pool_mean", r.pool_mean},
        {"pool_mean_se", r.pool_mean_se},
        {"max_pool", r.max_pool},
        {"pruned", r.pruned},
        {"conservation_ok", r.conservation_ok},
        {"probes", probes},
        {"autocorr", r.autocorr},
    };
}

}  // namespace unending
