#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "unending/numerics.hpp"
#include "unending/values.hpp"

using namespace unending;

TEST(Values, UniformCdfQuantile) {
    const auto u = ValueDistribution::uniform();
    EXPECT_DOUBLE_EQ(u.cdf(0.5), 0.5);
    EXPECT_DOUBLE_EQ(u.quantile(0.8), 0.8);
    EXPECT_EQ(u.cdf(-1.0), 0.0);
    EXPECT_EQ(u.cdf(2.0), 1.0);
    EXPECT_DOUBLE_EQ(u.pdf(0.3), 1.0);
    const auto v = ValueDistribution::uniform(2.0, 6.0);
    EXPECT_DOUBLE_EQ(v.cdf(3.0), 0.25);
    EXPECT_DOUBLE_EQ(v.quantile(0.5), 4.0);
    EXPECT_DOUBLE_EQ(v.pdf(3.0), 0.25);
}

TEST(Values, PowerLaw) {
    const auto p = ValueDistribution::power_law();
    EXPECT_DOUBLE_EQ(p.cdf(2.0), 0.5);
    EXPECT_EQ(p.cdf(1.0), 0.0);
    EXPECT_NEAR(p.quantile(0.8), 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.pdf(2.0), 0.25);
    EXPECT_FALSE(p.bounded());
    EXPECT_THROW(p.quantile(1.0), InvalidArgument);
    EXPECT_DOUBLE_EQ(p.grid_cap(), 0.9999);
    EXPECT_DOUBLE_EQ(p.with_grid_cap(0.99).grid_cap(), 0.99);
}

TEST(Values, TabulatedInterpolatesInverseCdf) {
    const auto t = ValueDistribution::tabulated({0.0, 1.0}, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(t.quantile(0.3), 0.3);
    const auto k = ValueDistribution::tabulated({0.0, 0.5, 1.0}, {1.0, 2.0, 10.0});
    EXPECT_DOUBLE_EQ(k.quantile(0.25), 1.5);
    EXPECT_DOUBLE_EQ(k.quantile(0.75), 6.0);
    EXPECT_DOUBLE_EQ(k.cdf(6.0), 0.75);
    EXPECT_DOUBLE_EQ(k.pdf(1.5), 0.5);
    EXPECT_DOUBLE_EQ(k.pdf(6.0), 0.5 / 8.0);
}

TEST(Values, TabulatedRejectsBadTables) {
    EXPECT_THROW(ValueDistribution::tabulated({0.0, 1.0}, {1.0, 1.0}), InvalidArgument);
    EXPECT_THROW(ValueDistribution::tabulated({0.0, 0.9}, {0.0, 1.0}), InvalidArgument);
    EXPECT_THROW(ValueDistribution::tabulated({0.0, 0.5, 0.5, 1.0}, {0.0, 1.0, 2.0, 3.0}), InvalidArgument);
    EXPECT_THROW(ValueDistribution::tabulated({0.0}, {0.0}), InvalidArgument);
    EXPECT_THROW(ValueDistribution::uniform(1.0, 1.0), InvalidArgument);
}

TEST(Values, CsvTable) {
    const auto path = std::filesystem::temp_directory_path() / "unending-values-table.csv";
    {
        std::ofstream out(path);
        out << "g,value\n0,0\n0.5,1\n1,4\n";
    }
    const auto d = parse_distribution("table:" + path.string());
    EXPECT_DOUBLE_EQ(d.quantile(0.75), 2.5);
    EXPECT_EQ(d.name(), "table");
    std::filesystem::remove(path);
    EXPECT_THROW(parse_distribution("table:/nonexistent/file.csv"), InvalidArgument);
}

TEST(Values, ParseDistribution) {
    EXPECT_EQ(parse_distribution("uniform").name(), "uniform");
    EXPECT_EQ(parse_distribution("powerlaw").name(), "powerlaw");
    EXPECT_DOUBLE_EQ(parse_distribution("uniform:1:3").quantile(0.5), 2.0);
    EXPECT_THROW(parse_distribution("gaussian"), InvalidArgument);
    EXPECT_THROW(parse_distribution("uniform:1"), InvalidArgument);
}

TEST(Values, Threshold) {
    const auto u = ValueDistribution::uniform();
    EXPECT_DOUBLE_EQ(threshold_value(u, 2.0, 1), 0.5);
    EXPECT_NEAR(threshold_value(ValueDistribution::power_law(), 5.0, 1), 5.0, 1e-12);
    EXPECT_NEAR(threshold_value(u, 5.0, 2), 0.6, 1e-15);
    EXPECT_THROW(threshold_value(u, 1.0, 1), ThresholdUndefined);
    EXPECT_THROW(threshold_value(u, 2.0, 2), ThresholdUndefined);
}

TEST(Values, ThresholdMonotone) {
    const auto u = ValueDistribution::uniform();
    double prev = 0.0;
    for (double l = 1.5; l < 10.0; l += 0.5) {
        const double t = threshold_value(u, l, 1);
        EXPECT_GE(t, prev);
        prev = t;
    }
    EXPECT_GE(threshold_value(u, 6.0, 1), threshold_value(u, 6.0, 2));
    EXPECT_GE(threshold_value(u, 6.0, 2), threshold_value(u, 6.0, 3));
}

TEST(Values, CdfInvertsQuantile) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> g(0.0, 1.0);
    const auto table = ValueDistribution::tabulated({0.0, 0.2, 0.7, 1.0}, {0.5, 1.0, 1.1, 9.0});
    for (const auto& d : {ValueDistribution::uniform(), ValueDistribution::uniform(1.0, 3.0), ValueDistribution::power_law(), table}) {
        for (int i = 0; i < 1000; ++i) {
            const double p = g(rng);
            EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-9) << d.name();
        }
    }
}

TEST(Values, QuantileInvertsCdf) {
    const auto p = ValueDistribution::power_law();
    for (double x : {1.5, 2.0, 10.0, 1e3}) EXPECT_NEAR(p.quantile(p.cdf(x)), x, 1e-9 * x);
}

TEST(Values, PdfIntegratesToOne) {
    // Piecewise trapezoid between the kinks, sampling just inside each piece.
    auto integrate = [](const ValueDistribution& d, const std::vector<double>& knots) {
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double eps = 1e-12 * (knots[k + 1] - knots[k]);
            const auto x = numerics::uniform_grid(10'001, knots[k] + eps, knots[k + 1] - eps);
            std::vector<double> y;
            for (double v : x) y.push_back(d.pdf(v));
            total += numerics::trapezoid(x, y);
        }
        return total;
    };
    EXPECT_NEAR(integrate(ValueDistribution::uniform(), {0.0, 1.0}), 1.0, 1e-6);
    EXPECT_NEAR(integrate(ValueDistribution::uniform(1.0, 3.0), {1.0, 3.0}), 1.0, 1e-6);
    const auto table = ValueDistribution::tabulated({0.0, 0.2, 0.7, 1.0}, {0.5, 1.0, 1.1, 9.0});
    EXPECT_NEAR(integrate(table, {0.5, 1.0, 1.1, 9.0}), 1.0, 1e-6);

    // Power law: integrate in log x; the tail beyond 1e8 carries 1e-8.
    const auto p = ValueDistribution::power_law();
    const auto t = numerics::uniform_grid(200'001, 0.0, std::log(1e8));
    std::vector<double> y;
    for (double s : t) y.push_back(p.pdf(std::exp(s)) * std::exp(s));
    EXPECT_NEAR(numerics::trapezoid(t, y) + 1e-8, 1.0, 1e-6);
}
