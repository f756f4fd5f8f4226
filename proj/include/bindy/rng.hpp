#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "bindy/errors.hpp"

namespace bindy {

/// splitmix64 finalizer; used to derive well-separated seeds from (seed, index) pairs.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(seed ^ mix64(a ^ mix64(b)));
}

// mt19937_64 with explicit variate mappings.  The standard pins the raw engine output
// but not the std:: distributions, so chains would not be bit-reproducible across
// standard libraries if we used those.
class Rng {
  public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform01_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Unbiased integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw InputError("uniform_below: empty range");
        const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
        std::uint64_t x = next_u64();
        while (x < min) x = next_u64();
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (stateless; one of the pair is discarded).
    double normal() {
        const double u1 = uniform01_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Gamma(shape, scale=1) via Marsaglia-Tsang squeeze.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw InputError("gamma: shape must be positive");
        if (shape < 1.0) {
            // boost: G(a) = G(a+1) * U^{1/a}
            return gamma(shape + 1.0) * std::pow(uniform01_pos(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    std::mt19937_64 engine_;
};

// One chain owns three independent sub-streams so tests can hold the model-move
// randomness fixed while perturbing the parameter draws (and vice versa).
struct ChainRngs {
    Rng jump;    // proposal index draws
    Rng accept;  // uniform accept/reject draws
    Rng draw;    // parameter and noise-variance draws

    static ChainRngs make(std::uint64_t seed, std::uint64_t chain_index = 0) {
        ChainRngs r;
        r.jump = Rng(derive_seed(seed, chain_index, 1));
        r.accept = Rng(derive_seed(seed, chain_index, 2));
        r.draw = Rng(derive_seed(seed, chain_index, 3));
        return r;
    }
};

}  // namespace bindy
