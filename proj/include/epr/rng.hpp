#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "epr/errors.hpp"

namespace epr {

// Seeded random stream with self-contained samplers. Draws depend only on
// the stream's seed and call sequence, never on the standard library's
// distribution implementations, so runs are reproducible byte-for-byte.
//
// Parallel proposal generation derives one stream per proposal index via
// substream(); any worker that owns an index produces identical values.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(mix_(seed ^ 0x5851f42d4c957f2dULL)) {}

    static RngStream substream(std::uint64_t seed, std::uint64_t index) {
        return RngStream(mix_(seed) ^ mix_(index + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Gamma(shape, rate = 1) via Marsaglia-Tsang, shape boost below 1.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw InvalidParams("gamma sample requires shape > 0");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
            return std::max(g, std::numeric_limits<double>::min());
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
            const double u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

    double student_t(double df) { return normal() / std::sqrt(chi_squared(df) / df); }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    // Inverse gamma with shape s and rate b, mean b/(s-1).
    double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }

    long long poisson(double mean) {
        if (!(mean >= 0.0)) throw InvalidParams("poisson sample requires mean >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) {
            // Knuth's product-of-uniforms walk.
            const double limit = std::exp(-mean);
            long long k = 0;
            double prod = uniform();
            while (prod > limit) {
                ++k;
                prod *= uniform();
            }
            return k;
        }
        return poisson_ptrs_(mean);
    }

    long long binomial(long long m, double prob) {
        if (m < 0 || prob < 0.0 || prob > 1.0)
            throw InvalidParams("binomial sample requires m >= 0 and prob in [0,1]");
        long long k = 0;
        for (long long i = 0; i < m; ++i)
            if (uniform() < prob) ++k;
        return k;
    }

private:
    static std::uint64_t mix_(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Hormann's PTRS transformed rejection, exact for large means.
    long long poisson_ptrs_(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double k = kf;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * loglam - mean - std::lgamma(k + 1.0))
                return static_cast<long long>(kf);
        }
    }

    std::mt19937_64 gen_;
};

}  // namespace epr
