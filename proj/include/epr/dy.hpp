#pragma once

#include <string>

#include "epr/rng.hpp"

namespace epr {

// The four unit families with density proportional to exp(alpha*y - kappa*psi(y)):
//   Gaussian   psi(y) = y^2
//   LogGamma   psi(y) = exp(y)
//   LogitBeta  psi(y) = log(1 + exp(y))
//   StudentT   psi(y) = log(1 + y^2/nu), alpha fixed at 0
enum class DyKind { Gaussian, LogGamma, LogitBeta, StudentT };

struct DyFamily {
    DyKind kind = DyKind::Gaussian;
    double nu = 0.0;  // StudentT only

    static DyFamily gaussian() { return {DyKind::Gaussian, 0.0}; }
    static DyFamily log_gamma() { return {DyKind::LogGamma, 0.0}; }
    static DyFamily logit_beta() { return {DyKind::LogitBeta, 0.0}; }
    static DyFamily student_t(double nu) { return {DyKind::StudentT, nu}; }

    bool operator==(const DyFamily& o) const { return kind == o.kind && nu == o.nu; }
};

const char* dy_kind_name(DyKind kind);

struct DyParams {
    DyFamily family;
    double alpha = 0.0;
    double kappa = 1.0;

    // Enforces kappa > 0 and the family's alpha constraint:
    // Gaussian any alpha; LogGamma alpha > 0; LogitBeta 0 < alpha < kappa;
    // StudentT alpha == 0, nu > 0 and kappa > 1/2.
    void validate() const;
};

double psi(const DyFamily& family, double z);

// One exact draw. Closed-form reductions only, no rejection step:
// Gaussian -> Normal(alpha/2kappa, 1/2kappa); LogGamma -> log Gamma(alpha, rate kappa);
// LogitBeta -> logit of Beta(alpha, kappa - alpha), realised as a log-gamma
// difference so the result never degenerates to +-infinity;
// StudentT -> sqrt(nu/m) * t_m with m = 2*kappa - 1.
double dy_sample(const DyParams& params, RngStream& rng);

// Exact log density including the normalizing constant.
double dy_log_density(const DyParams& params, double y);

// Conjugate update: (alpha + z, kappa + b), same family.
DyParams dy_posterior_update(const DyParams& prior, double z, double b);

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

// Analytic first two moments; throws MomentsUndefined when they do not exist.
MeanVar dy_mean_variance(const DyParams& params);

}  // namespace epr
