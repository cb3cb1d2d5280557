#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "unending/commands.hpp"

using namespace unending;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("unending-") + info->test_suite_name() + "-" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Scenario scenario(double lambda, double delta, const TempDir& dir) {
    Scenario s;
    s.lambda = lambda;
    s.delta = delta;
    s.out = dir.str();
    return s;
}

/// Runs the built binary; returns its exit code and fills `out` with stdout.
int run_cli(const std::string& args, std::string* out = nullptr) {
    const auto capture = fs::temp_directory_path() / "unending-cli-stdout.txt";
    const std::string cmd = std::string(UNENDING_CLI) + " " + args + " > " + capture.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (out) *out = slurp(capture);
    fs::remove(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Commands, StationaryLargePool) {
    TempDir dir;
    const auto out = cmd_stationary(scenario(2.0, 0.01, dir));
    EXPECT_LT(out.results.at("p0").get<double>(), 1e-10);
    EXPECT_NEAR(out.results.at("mean_closed").get<double>(), 101.0, 0.5);
    ASSERT_EQ(out.files.size(), 2u);
    const auto csv = slurp(out.files[0]);
    EXPECT_EQ(csv.rfind("# config={", 0), 0u);
    EXPECT_NE(csv.find("\nn,p_n\n0,"), std::string::npos);
}

TEST(Commands, StationaryZeroUncertainty) {
    TempDir dir;
    const auto out = cmd_stationary(scenario(0.5, 0.0, dir));
    EXPECT_NEAR(out.results.at("p0").get<double>(), 0.5, 1e-12);
    EXPECT_THROW(cmd_stationary(scenario(2.0, 0.0, dir)), NonErgodic);
    try {
        cmd_stationary(scenario(2.0, 0.0, dir));
    } catch (const NonErgodic& e) {
        EXPECT_NE(std::string(e.what()).find("Transient"), std::string::npos);
    }
}

TEST(Commands, BidCurveZeroUncertainty) {
    TempDir dir;
    auto s = scenario(2.0, 0.0, dir);
    s.g_points = 11;
    const auto out = cmd_bid_curve(s);
    EXPECT_DOUBLE_EQ(out.results.at("threshold").get<double>(), 0.5);
    std::ifstream in(out.files[0]);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(line, "x,g,b,Z,W,H");
    int rows = 0;
    while (std::getline(in, line)) {
        double x = 0, g = 0, b = 0;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &g, &b), 3);
        EXPECT_NEAR(b, std::min(x, 0.5), 1e-15);
        ++rows;
    }
    EXPECT_EQ(rows, 11);
}

TEST(Commands, BidCurveWithUncertainty) {
    TempDir dir;
    auto s = scenario(2.0, 0.1, dir);
    s.x_points = 21;
    const auto out = cmd_bid_curve(s);
    EXPECT_EQ(out.results.at("points").get<std::size_t>(), 21u);
    EXPECT_GE(out.results.at("ode_fraction_below_1e-3").get<double>(), 0.95);
}

TEST(Commands, WinnerCurve) {
    TempDir dir;
    auto s = scenario(2.0, 0.0, dir);
    s.g_points = 257;
    const auto out = cmd_winner_curve(s);
    EXPECT_EQ(out.results.at("W0").get<double>(), 0.0);
    EXPECT_EQ(slurp(out.files[0]).find("\ng,W,log_W,w,H\n") != std::string::npos, true);
}

TEST(Commands, Regime) {
    TempDir dir;
    EXPECT_EQ(cmd_regime(scenario(1.0, 0.0, dir)), "NullRecurrent");
    EXPECT_EQ(cmd_regime(scenario(2.0, 0.0, dir)), "Transient");
    EXPECT_EQ(cmd_regime(scenario(2.0, 0.01, dir)), "PositiveRecurrent");
}

TEST(Commands, SimulateWritesOutputs) {
    TempDir dir;
    auto s = scenario(2.0, 0.1, dir);
    s.rounds = 20'000;
    s.warmup = 1000;
    s.bid_source = "values";
    s.probes = {{0.8, 0, 20}};
    s.trace = true;
    const auto out = cmd_simulate(s);
    EXPECT_EQ(out.files.size(), 4u);
    for (const auto& f : out.files) EXPECT_TRUE(fs::exists(f)) << f;
    EXPECT_EQ(out.results.at("probe_replications").size(), 1u);
    EXPECT_TRUE(out.results.at("report").at("conservation_ok").get<bool>());
}

TEST(Commands, SimulateRegimeSwitch) {
    TempDir dir;
    auto s = scenario(2.0, 0.1, dir);
    s.rounds = 5000;
    s.warmup = 1000;
    s.bid_source = "values";
    s.switch_round = 3000;
    s.switch_lambda = 5.0;
    const auto out = cmd_simulate(s);
    EXPECT_TRUE(out.results.contains("regime_switch"));
    EXPECT_NE(out.files.front().string().find("-regime.csv"), std::string::npos);
}

TEST(Io, OutputNaming) {
    const Json config = {{"a", 1}};
    const auto stem = output_stem("stationary", config);
    EXPECT_EQ(stem.size(), std::string("stationary-").size() + 16);
    EXPECT_EQ(stem.rfind("stationary-", 0), 0u);
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_NE(output_stem("stationary", {{"a", 2}}), stem);
}

TEST(Io, OutputDirectoryNotHashed) {
    TempDir a, b;
    const auto x = cmd_stationary(scenario(0.5, 0.0, a));
    const auto y = cmd_stationary(scenario(0.5, 0.0, b));
    EXPECT_EQ(x.files[0].filename(), y.files[0].filename());
    EXPECT_EQ(slurp(x.files[0]), slurp(y.files[0]));
}

TEST(Io, ConfigRoundTripReproducesBytes) {
    TempDir dir, again;
    auto s = scenario(2.0, 0.05, dir);
    s.g_points = 257;
    const auto first = cmd_bid_curve(s);
    auto t = load_scenario(first.files[1].string());
    t.out = again.str();
    const auto second = cmd_bid_curve(t);
    ASSERT_EQ(first.files.size(), second.files.size());
    for (std::size_t i = 0; i < first.files.size(); ++i) {
        EXPECT_EQ(first.files[i].filename(), second.files[i].filename());
        EXPECT_EQ(slurp(first.files[i]), slurp(second.files[i]));
    }
}

TEST(Io, RejectsUnknownKeys) {
    Scenario s;
    EXPECT_THROW(merge_json(s, Json{{"lambda", 2.0}, {"lamda", 3.0}}), InvalidArgument);
    EXPECT_THROW(merge_json(s, Json{{"lambda", "two"}}), InvalidArgument);
    merge_json(s, Json{{"lambda", 3.0}, {"warmup", 50}});
    EXPECT_EQ(s.lambda, 3.0);
    EXPECT_EQ(s.resolved_warmup(), 50u);
    EXPECT_THROW(load_scenario("/nonexistent/config.json"), InvalidArgument);
}

TEST(Io, DoubleFormatting) {
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "");
    std::ostringstream os;
    CsvTable().column("a", std::vector<double>{1.0, 0.25}).column("n", std::vector<std::uint64_t>{3, 4}).write(os, Json{{"k", 1}});
    EXPECT_EQ(os.str(), "# config={\"k\":1}\na,n\n1,3\n0.25,4\n");
    EXPECT_THROW(CsvTable().column("a", std::vector<double>{1.0}).column("b", std::vector<double>{}), InvalidArgument);
}

TEST(Binary, ExitCodes) {
    TempDir dir;
    const std::string out = " --out " + dir.str();
    std::string text;
    EXPECT_EQ(run_cli("regime --lambda 1 --delta 0", &text), 0);
    EXPECT_EQ(text, "NullRecurrent\n");
    EXPECT_EQ(run_cli("stationary --lambda 0.5 --delta 0" + out, &text), 0);
    EXPECT_NE(text.find("stationary-"), std::string::npos);
    EXPECT_EQ(run_cli("stationary --lambda 2 --delta 0" + out), 1);
    EXPECT_EQ(run_cli("stationary --lambda -1" + out), 1);
    EXPECT_EQ(run_cli("stationary --dist gaussian" + out), 1);
    EXPECT_EQ(run_cli("stationary --no-such-flag"), 1);
    EXPECT_EQ(run_cli("bid-curve --lambda 1 --delta 0" + out), 1);
    EXPECT_EQ(run_cli("winner-curve --g-points 100 --delta 0.1" + out), 2);
    EXPECT_EQ(run_cli("verify 99"), 1);
}

TEST(Binary, VerifyDeterminism) {
    std::string text;
    EXPECT_EQ(run_cli("verify determinism", &text), 0);
    EXPECT_EQ(text.rfind("PASS [13]", 0), 0u) << text;
}

TEST(Binary, FlagsOverrideConfig) {
    TempDir dir;
    const auto cfg = dir.path() / "scenario.json";
    {
        std::ofstream f(cfg);
        f << R"({"lambda": 0.5, "delta": 0.0, "out": ")" << dir.str() << "\"}";
    }
    std::string text;
    EXPECT_EQ(run_cli("regime --config " + cfg.string(), &text), 0);
    EXPECT_EQ(text, "PositiveRecurrent\n");
    EXPECT_EQ(run_cli("regime --config " + cfg.string() + " --lambda 1", &text), 0);
    EXPECT_EQ(text, "NullRecurrent\n");
}
