#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "unending/equilibrium.hpp"
#include "unending/winner.hpp"

using namespace unending;

TEST(Winner, ClosedFormZeroUncertainty) {
    EXPECT_DOUBLE_EQ(winner_cdf_closed_zero(2.0, 1, 0.75), 0.5);
    EXPECT_DOUBLE_EQ(winner_cdf_closed_zero(2.0, 1, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(winner_cdf_closed_zero(2.0, 1, 0.3), 0.0);
    EXPECT_DOUBLE_EQ(winner_cdf_closed_zero(2.0, 1, 1.0), 1.0);
    EXPECT_NEAR(winner_cdf_closed_zero(2.0, 1, 0.9), 0.8, 1e-15);
    EXPECT_NEAR(winner_cdf_closed_zero(5.0, 2, 0.8), 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(winner_cdf_closed_zero(0.5, 1, 0.0), 0.5);
}

TEST(Winner, ZeroUncertaintyCurve) {
    const auto c = build_winner_curve(2.0, 0.0, 1, 1025);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(c.W[i], std::max(0.0, 1.0 - 2.0 * (1.0 - c.g[i])), 1e-15);
        if (c.g[i] > 0.502 && i + 1 < c.size()) { EXPECT_NEAR(c.w[i], 2.0, 1e-9); }
        if (c.g[i] < 0.498) { EXPECT_EQ(c.w[i], 0.0); }
        EXPECT_EQ(c.H[i], c.W[i] > 0.0 ? 1.0 : 0.0);
    }
    EXPECT_LT(density_integral_defect(c), 1e-3);
}

TEST(Winner, DeltaOneSuccessEqualsCdf) {
    const auto c = build_winner_curve(3.0, 1.0, 1, 257);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(c.W[i], std::exp(-3.0 * (1.0 - c.g[i])), 1e-14);
        EXPECT_NEAR(c.H[i], c.W[i], 1e-14);
    }
}

TEST(Winner, SuccessProbabilityFormula) {
    const auto c = build_winner_curve(2.0, 0.1, 1, 257);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double W = c.W[i];
        EXPECT_NEAR(c.H[i], W / (0.1 + 0.9 * W), 1e-12);
        EXPECT_GE(c.H[i], c.W[i] - 1e-15);
        EXPECT_LE(c.H[i], 1.0);
    }
    EXPECT_DOUBLE_EQ(c.H.back(), 1.0);
}

TEST(Winner, CdfIsMonotone) {
    for (double d : {0.01, 0.1, 0.5}) {
        const auto c = build_winner_curve(5.0, d, 1, 513);
        for (std::size_t i = 1; i < c.size(); ++i) {
            EXPECT_GE(c.W[i], c.W[i - 1]);
            EXPECT_GE(c.log_W[i], c.log_W[i - 1]);
        }
        EXPECT_DOUBLE_EQ(c.W.back(), 1.0);
        EXPECT_EQ(c.max_clip, 0.0);
    }
}

TEST(Winner, UniversalAcrossDistributions) {
    const auto c = build_winner_curve(2.0, 0.05, 1, 513);
    const auto table = ValueDistribution::tabulated({0.0, 0.3, 1.0}, {0.0, 5.0, 6.0});
    for (const auto& d : {ValueDistribution::uniform(), ValueDistribution::uniform(3.0, 7.0), table, ValueDistribution::power_law()}) {
        const auto b = bid_with_uncertainty(d, c);
        for (std::size_t i = 0; i < b.size(); ++i) {
            EXPECT_EQ(b.g[i], c.g[i]);
            EXPECT_EQ(b.W[i], c.W[i]);
            EXPECT_EQ(b.H[i], c.H[i]);
        }
    }
}

TEST(Winner, SmallDeltaApproachesClosedForm) {
    const double delta = 1e-4;
    const auto c = winner_cdf(2.0, delta, 1, numerics::uniform_grid(41));
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.g[i] > 0.45 && c.g[i] < 0.55) continue;
        EXPECT_LT(std::abs(c.W[i] - winner_cdf_closed_zero(2.0, 1, c.g[i])), 0.05) << c.g[i];
    }
}

TEST(Winner, DensitySmoothsTheStep) {
    // The zero-uncertainty density jumps from 0 to lambda at 0.5; removal
    // smears the jump into a monotone ramp that approaches lambda from below.
    const auto c = build_winner_curve(2.0, 0.01, 1, 1025);
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        EXPECT_GE(c.w[i] + 1e-9, c.w[i - 1]) << c.g[i];
        EXPECT_LE(c.w[i], 2.0 + 1e-9);
    }
    EXPECT_GT(c.w[512], 0.5);
    EXPECT_LT(c.w[512], 1.9);
    EXPECT_LT(c.w[256], 1e-6);
    EXPECT_GT(c.w[1023], 1.99);
    EXPECT_LT(density_integral_defect(c), 1e-3);
}

TEST(Winner, SolverMatchesSeries) {
    WinnerOptions solver;
    solver.method = WinnerMethod::Solver;
    for (double d : {0.05, 0.3}) {
        const auto g = numerics::uniform_grid(17);
        const auto a = winner_cdf(2.0, d, 1, g);
        const auto b = winner_cdf(2.0, d, 1, g, solver);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (a.W[i] > 1e-250) {
                EXPECT_NEAR(b.W[i], a.W[i], 1e-9 * a.W[i] + 1e-300) << d << " " << g[i];
            }
            EXPECT_NEAR(b.log_W[i], a.log_W[i], 1e-8 * std::max(1.0, std::abs(a.log_W[i]))) << d << " " << g[i];
        }
    }
}

TEST(Winner, MultiWinnerReducesToSingle) {
    const auto g = numerics::uniform_grid(9);
    WinnerOptions solver;
    solver.method = WinnerMethod::Solver;
    const auto a = winner_cdf(1.5, 0.2, 1, g, solver);
    const auto p = solve_stationary({1.5 * 0.5, 0.2, 1});
    EXPECT_DOUBLE_EQ(winner_fraction_from_pool(p, 1), p.p0());
    EXPECT_NEAR(a.W[4], p.p0(), 1e-15);
}

TEST(Winner, MultiWinnerFraction) {
    const auto g = numerics::uniform_grid(9);
    const auto c = winner_cdf(3.0, 0.1, 2, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = solve_stationary({3.0 * (1.0 - g[i]), 0.1, 2});
        EXPECT_NEAR(c.W[i], p.probs[0] + 0.5 * p.probs[1], 1e-12);
        if (i > 0) { EXPECT_GE(c.W[i], c.W[i - 1]); }
    }
    EXPECT_DOUBLE_EQ(c.W.back(), 1.0);
}

TEST(Winner, MultiWinnerZeroUncertainty) {
    const auto c = build_winner_curve(5.0, 0.0, 2, 257);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.W[i], std::max(0.0, 1.0 - 2.5 * (1.0 - c.g[i])), 1e-14);
}

TEST(Winner, RejectsCoarseGrids) {
    EXPECT_THROW(build_winner_curve(2.0, 0.1, 1, 100), GridTooCoarse);
    EXPECT_NO_THROW(build_winner_curve(2.0, 0.1, 1, kMinDensityGridPoints));
    EXPECT_NO_THROW(winner_cdf(2.0, 0.1, 1, numerics::uniform_grid(5)));
}

TEST(Winner, RejectsBadInput) {
    EXPECT_THROW(winner_cdf(2.0, 0.1, 1, {0.5, 0.2}), InvalidArgument);
    EXPECT_THROW(winner_cdf(2.0, 0.1, 1, {0.0, 1.5}), InvalidArgument);
    EXPECT_THROW(winner_cdf(-2.0, 0.1, 1, {0.0, 1.0}), InvalidArgument);
}

TEST(Winner, ThreadCountDoesNotChangeResult) {
    WinnerOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto g = numerics::uniform_grid(65);
    const auto a = winner_cdf(2.0, 0.02, 1, g, one);
    const auto b = winner_cdf(2.0, 0.02, 1, g, four);
    EXPECT_EQ(a.W, b.W);
    EXPECT_EQ(a.log_W, b.log_W);
}
