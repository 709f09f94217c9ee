#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "svt/core.hpp"

namespace svt {

/// Seeded pseudo-random source used everywhere randomness is needed.
///
/// Built on std::mt19937_64 with explicit variate transforms (53-bit
/// uniform doubles, Box-Muller normals, rejection-sampled bounded
/// integers) so that a given seed yields the same stream on every
/// platform with a conforming mt19937_64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1), 53 bits of precision.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Unbiased uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw ValidationError("Rng::below: n must be positive");
        const std::uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t draw = gen_();
            if (draw >= threshold) return draw % n;
        }
    }

    Vector normal_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Normalized Gaussian direction; retries in the measure-zero event
    /// of a zero draw.
    Vector unit_vector(Index n) {
        for (;;) {
            Vector v = normal_vector(n);
            const double norm = v.norm();
            if (norm > 0) return v / norm;
        }
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace svt
