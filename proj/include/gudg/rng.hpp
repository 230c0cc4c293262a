/**
 * Deterministic random number generation for benchmarks, instance
 * generators, and tests.
 *
 * std::mt19937_64 supplies the raw stream, but the real-valued and bounded
 * integer mappings are implemented explicitly here because the standard
 * distributions are implementation-defined: identical (seed, call sequence)
 * pairs must yield byte-identical outputs across toolchains.
 */
#pragma once

#include <cstdint>
#include <random>

#include "gudg/geometry.hpp"

namespace gudg {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n) by rejection (unbiased, deterministic).
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
        return lo + static_cast<std::int64_t>(
                        below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Log-uniform integer in [lo, hi] (both >= 1); biases toward small sizes.
    std::int64_t log_uniform_int(std::int64_t lo, std::int64_t hi) {
        const double u = uniform(std::log(static_cast<double>(lo)),
                                 std::log(static_cast<double>(hi) + 1.0));
        std::int64_t v = static_cast<std::int64_t>(std::exp(u));
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        return v;
    }

    Point point_in_box(const BBox& b) {
        return {uniform(b.min_x, b.max_x), uniform(b.min_y, b.max_y)};
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gudg
