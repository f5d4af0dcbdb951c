// Deterministic random-number utilities.
//
// All stochastic components of the library draw from this generator so that
// a run is reproducible from its seed alone. Distribution sampling is
// implemented here rather than with <random> adaptors because the standard
// distributions are implementation-defined and would break bit-for-bit
// reproducibility of generated datasets and logs across toolchains.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace narmax {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t nextU64() { return gen_(); }

    /// Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
    int uniformInt(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    std::size_t uniformIndex(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

    /// Uniform double in [0, 1).
    double uniformReal() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniformReal() < p; }

    /// Standard normal deviate via Box-Muller.
    double gaussian() {
        double u1;
        do {
            u1 = uniformReal();
        } while (u1 <= 0.0);
        const double u2 = uniformReal();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace narmax
