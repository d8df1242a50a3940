#include "epr/dy.hpp"

#include <cmath>
#include <sstream>

#include "epr/special.hpp"

namespace epr {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

[[noreturn]] void fail(const DyParams& p, const std::string& why) {
    std::ostringstream msg;
    msg << "invalid DY parameters (" << dy_kind_name(p.family.kind) << ", alpha=" << p.alpha
        << ", kappa=" << p.kappa;
    if (p.family.kind == DyKind::StudentT) msg << ", nu=" << p.family.nu;
    msg << "): " << why;
    throw InvalidParams(msg.str());
}

// Pearson-VII degrees of freedom implied by kappa; equals nu when
// kappa = (nu + 1)/2.
double t_df(const DyParams& p) { return 2.0 * p.kappa - 1.0; }

}  // namespace

const char* dy_kind_name(DyKind kind) {
    switch (kind) {
        case DyKind::Gaussian: return "gaussian";
        case DyKind::LogGamma: return "log_gamma";
        case DyKind::LogitBeta: return "logit_beta";
        case DyKind::StudentT: return "student_t";
    }
    return "?";
}

void DyParams::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(kappa)) fail(*this, "non-finite parameter");
    if (!(kappa > 0.0)) fail(*this, "kappa must be positive");
    switch (family.kind) {
        case DyKind::Gaussian:
            break;
        case DyKind::LogGamma:
            if (!(alpha > 0.0)) fail(*this, "alpha must be positive");
            break;
        case DyKind::LogitBeta:
            if (!(alpha > 0.0) || !(alpha < kappa)) fail(*this, "requires 0 < alpha < kappa");
            break;
        case DyKind::StudentT:
            if (alpha != 0.0) fail(*this, "alpha must be 0");
            if (!(family.nu > 0.0)) fail(*this, "nu must be positive");
            if (!(kappa > 0.5)) fail(*this, "kappa must exceed 1/2");
            break;
    }
}

double psi(const DyFamily& family, double z) {
    switch (family.kind) {
        case DyKind::Gaussian: return z * z;
        case DyKind::LogGamma: return std::exp(z);
        case DyKind::LogitBeta: return softplus(z);
        case DyKind::StudentT: return std::log1p(z * z / family.nu);
    }
    return 0.0;
}

double dy_sample(const DyParams& params, RngStream& rng) {
    params.validate();
    switch (params.family.kind) {
        case DyKind::Gaussian:
            return params.alpha / (2.0 * params.kappa) + rng.normal() / std::sqrt(2.0 * params.kappa);
        case DyKind::LogGamma:
            return std::log(rng.gamma(params.alpha)) - std::log(params.kappa);
        case DyKind::LogitBeta: {
            const double a = std::log(rng.gamma(params.alpha));
            const double b = std::log(rng.gamma(params.kappa - params.alpha));
            return a - b;
        }
        case DyKind::StudentT: {
            const double m = t_df(params);
            return std::sqrt(params.family.nu / m) * rng.student_t(m);
        }
    }
    return 0.0;
}

double dy_log_density(const DyParams& params, double y) {
    params.validate();
    const double a = params.alpha;
    const double k = params.kappa;
    switch (params.family.kind) {
        case DyKind::Gaussian:
            return 0.5 * std::log(k / kPi) - a * a / (4.0 * k) + a * y - k * y * y;
        case DyKind::LogGamma:
            return a * std::log(k) - std::lgamma(a) + a * y - k * std::exp(y);
        case DyKind::LogitBeta:
            return -log_beta(a, k - a) + a * y - k * softplus(y);
        case DyKind::StudentT: {
            const double nu = params.family.nu;
            const double log_norm =
                std::lgamma(k) - std::lgamma(k - 0.5) - 0.5 * std::log(nu * kPi);
            return log_norm - k * std::log1p(y * y / nu);
        }
    }
    return 0.0;
}

DyParams dy_posterior_update(const DyParams& prior, double z, double b) {
    prior.validate();
    if (!(b > 0.0)) throw InvalidParams("posterior update requires b > 0");
    if (!std::isfinite(z)) throw InvalidParams("posterior update requires finite z");
    if (prior.family.kind == DyKind::LogGamma && z < 0.0)
        throw InvalidParams("count data must be nonnegative");
    if (prior.family.kind == DyKind::LogitBeta && (z < 0.0 || z > b))
        throw InvalidParams("binomial data must satisfy 0 <= z <= m");
    DyParams post{prior.family, prior.alpha + z, prior.kappa + b};
    post.validate();
    return post;
}

MeanVar dy_mean_variance(const DyParams& params) {
    params.validate();
    switch (params.family.kind) {
        case DyKind::Gaussian:
            return {params.alpha / (2.0 * params.kappa), 1.0 / (2.0 * params.kappa)};
        case DyKind::LogGamma:
            return {digamma(params.alpha) - std::log(params.kappa), trigamma(params.alpha)};
        case DyKind::LogitBeta:
            return {digamma(params.alpha) - digamma(params.kappa - params.alpha),
                    trigamma(params.alpha) + trigamma(params.kappa - params.alpha)};
        case DyKind::StudentT: {
            const double m = t_df(params);
            if (!(m > 2.0)) throw MomentsUndefined("student_t variance requires kappa > 3/2");
            return {0.0, params.family.nu / (m - 2.0)};
        }
    }
    return {};
}

}  // namespace epr
