#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

namespace unending {

/// mt19937_64 plus samplers whose output is fixed by this header alone, so
/// a seed reproduces the same stream on every platform. (The standard
/// library distributions are implementation-defined.)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng({seed}) {}

    Rng(std::initializer_list<std::uint64_t> words) {
        std::vector<std::uint32_t> halves;
        for (auto w : words) {
            halves.push_back(static_cast<std::uint32_t>(w));
            halves.push_back(static_cast<std::uint32_t>(w >> 32));
        }
        std::seed_seq s(halves.begin(), halves.end());
        engine_.seed(s);
    }

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r < limit) return r % n;
        }
    }

    /// Poisson by inversion; large means are split into chunks of at most 30.
    std::uint64_t poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

    /// Binomial(n, p) by geometric skipping over the successes.
    std::uint64_t binomial(std::uint64_t n, double p) {
        if (n == 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        const double log_q = std::log1p(-p);
        std::uint64_t count = 0;
        double pos = 0.0;
        const auto nd = static_cast<double>(n);
        for (;;) {
            pos += std::floor(std::log(uniform_open0()) / log_q) + 1.0;
            if (pos > nd) return count;
            ++count;
        }
    }

private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u >= cdf && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    std::mt19937_64 engine_;
};

}  // namespace unending
