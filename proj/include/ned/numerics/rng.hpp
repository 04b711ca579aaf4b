#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ned {

/// Counter-based pseudo-random source: every variate is a pure function of
/// (seed, path, step, draw), so any subset of paths can be generated in any
/// order, on any thread, with bitwise-identical results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform in (0, 1]; never returns 0 so it is safe under log().
    double uniform(std::uint64_t path, std::uint64_t step, std::uint64_t draw) const {
        const std::uint64_t bits = mix(path, step, draw);
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draw k consumes uniforms 2k and 2k+1.
    double normal(std::uint64_t path, std::uint64_t step, std::uint64_t draw) const {
        const double u1 = uniform(path, step, 2 * draw);
        const double u2 = uniform(path, step, 2 * draw + 1);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t mix(std::uint64_t path, std::uint64_t step, std::uint64_t draw) const {
        std::uint64_t h = splitmix(seed_ ^ 0xA0761D6478BD642Full);
        h = splitmix(h ^ path);
        h = splitmix(h ^ step);
        h = splitmix(h ^ draw);
        return h;
    }

    std::uint64_t seed_;
};

}  // namespace ned
