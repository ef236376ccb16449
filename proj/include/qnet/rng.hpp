#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qnet {

/// Seeded generator with platform-stable distributions.
///
/// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
/// adaptors are not, so every variate here is derived from raw engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return uniform() < p;
    }

    /// Exponential variate with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer in [0, n); n must be positive. Rejection sampling keeps it unbiased.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    /// Poisson variate by counting exponential arrivals in a unit interval; fine for small means.
    std::uint64_t poisson(double mean) {
        std::uint64_t k = 0;
        double t = exponential(1.0);
        while (t < mean) {
            ++k;
            t += exponential(1.0);
        }
        return k;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qnet
