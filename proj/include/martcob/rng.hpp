#pragma once

#include <cstdint>

#include "cylinder.hpp"

namespace martcob {

/**
 * Counter-based generator: output t of stream (seed, stream) is a pure
 * function of (seed, stream, t), so any worker can be handed its own stream
 * and replay is exact regardless of scheduling.
 */
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(seed), stream_(stream) {}

    std::uint64_t next() { return mix(key_, stream_, counter_++); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], inclusive.
    long uniform_int(long lo, long hi) {
        std::uint64_t span = std::uint64_t(hi - lo + 1);
        std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % span;
        std::uint64_t r;
        do { r = next(); } while (r >= limit);
        return lo + long(r % span);
    }

    /// Index sampled from a cumulative distribution (last entry ~ 1).
    int pick(const std::vector<double>& cdf) {
        double u = uniform01();
        for (std::size_t i = 0; i + 1 < cdf.size(); ++i)
            if (u < cdf[i]) return static_cast<int>(i);
        return static_cast<int>(cdf.size() - 1);
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27; z *= 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
        std::uint64_t z = finalize(a + 0x9E3779B97F4A7C15ull * b + 0x632BE59BD9B4E019ull);
        return finalize(z + 0x9E3779B97F4A7C15ull * c);
    }

    std::uint64_t key_, stream_;
    std::uint64_t counter_ = 0;
};

/// Random table on the given window with small dyadic-friendly rationals
/// (numerator in [-range, range], denominator in {1,2,4,8}).
template <class S>
CylinderFn<S> random_function(SystemPtr<S> sys, const std::vector<int>& window,
                              CounterRng& rng, long range = 12) {
    std::vector<S> table(detail::table_len(*sys, window));
    for (S& v : table) {
        long num = rng.uniform_int(-range, range);
        long den = 1L << rng.uniform_int(0, 3);
        v = ScalarTraits<S>::from_fraction(num, den);
    }
    return CylinderFn<S>(std::move(sys), window, std::move(table));
}

/// Random window with entries in [0, wmax].
template <class S>
std::vector<int> random_window(const System<S>& sys, CounterRng& rng, int wmax) {
    std::vector<int> w(sys.dim());
    for (int& x : w) x = static_cast<int>(rng.uniform_int(0, wmax));
    return w;
}

} // namespace martcob
