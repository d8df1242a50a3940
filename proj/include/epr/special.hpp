#pragma once

#include <cmath>

#include "epr/errors.hpp"

namespace epr {

// Digamma via upward recurrence into the asymptotic regime.
inline double digamma(double x) {
    if (!(x > 0.0)) throw InvalidParams("digamma requires x > 0");
    double value = 0.0;
    while (x < 6.0) {
        value -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_{2n}/(2n x^{2n})
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 -
                                        inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return value + std::log(x) - 0.5 * inv - series;
}

inline double trigamma(double x) {
    if (!(x > 0.0)) throw InvalidParams("trigamma requires x > 0");
    double value = 0.0;
    while (x < 6.0) {
        value += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        1.0 + inv * 0.5 +
        inv2 * (1.0 / 6.0 -
                inv2 * (1.0 / 30.0 -
                        inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
    return value + inv * series;
}

inline double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidParams("log_beta requires positive arguments");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace epr
