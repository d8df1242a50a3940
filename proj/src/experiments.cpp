#include "epr/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "epr/special.hpp"

namespace epr {

namespace {

Eigen::VectorXd posterior_mean(const DrawSet& set, const std::string& target) {
    const Eigen::MatrixXd m = draw_matrix(set, target);
    return m.colwise().mean();
}

double median_of(std::vector<double> x) {
    if (x.empty()) throw InvalidParams("median of an empty set");
    return sample_quantile(std::move(x), 0.5);
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw NumericError("correlation undefined: a series is constant");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Study1Design::Study1Design() {
    beta_true.resize(9);
    beta_true << 9.0, -3.0, 3.0, -0.2, -1.0, 2.0, 2.6, -0.5, 2.0;
    prior.family = DyFamily::student_t(3.0);
    prior.alpha = 0.0;
    prior.kappa = 2.0;
}

std::pair<GlmmSpec, Study1Truth> gen_study1(const Study1Design& design, std::uint64_t seed) {
    const Eigen::Index n = design.n_per_block;
    const Eigen::Index basis = design.basis_count;
    if (n < basis) throw InvalidParams("n_per_block must be at least basis_count");
    if (design.beta_true.size() != 9) throw InvalidParams("beta_true must have 9 entries");

    Eigen::MatrixXd m_mat(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        m_mat(i, 0) = 1.0;
        m_mat(i, 1) = t;
        m_mat(i, 2) = t * t;
    }
    Eigen::MatrixXd x_all = Eigen::MatrixXd::Zero(3 * n, 9);
    for (int k = 0; k < 3; ++k) x_all.block(k * n, 3 * k, n, 3) = m_mat;

    Eigen::MatrixXd basis_block(n, basis);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < basis; ++j)
            basis_block(i, j) = std::exp(-std::fabs(static_cast<double>(i - j)));
    Eigen::MatrixXd g_all(3 * n, basis);
    for (int k = 0; k < 3; ++k) g_all.middleRows(k * n, n) = basis_block;
    // orthogonalize against the fixed effects to avoid confounding
    const Eigen::MatrixXd xtx_inv_xt =
        (x_all.transpose() * x_all).ldlt().solve(x_all.transpose() * g_all);
    g_all -= x_all * xtx_inv_xt;

    const Eigen::VectorXd xb = x_all * design.beta_true;
    double eta_sd;
    if (design.eta_sd_override) {
        eta_sd = *design.eta_sd_override;
    } else {
        const double mean = xb.mean();
        eta_sd = std::sqrt((xb.array() - mean).square().sum() / static_cast<double>(xb.size()));
    }

    RngStream rng(seed);
    Eigen::VectorXd eta_true(basis);
    for (Eigen::Index j = 0; j < basis; ++j) eta_true[j] = eta_sd * rng.normal();
    const Eigen::VectorXd y_true = xb + g_all * eta_true;

    GlmmSpec glmm;
    const double sigma_true = std::sqrt(design.sigma_true_sq);

    DataBlock gauss;
    gauss.kind = ResponseKind::Gaussian;
    gauss.z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) gauss.z[i] = y_true[i] + sigma_true * rng.normal();
    gauss.aux = Eigen::VectorXd::Constant(n, design.sigma_true_sq);
    gauss.X = x_all.topRows(n);
    gauss.G = g_all.topRows(n);
    glmm.blocks.push_back(std::move(gauss));

    DataBlock pois;
    pois.kind = ResponseKind::Poisson;
    pois.z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        pois.z[i] = static_cast<double>(rng.poisson(std::exp(y_true[n + i])));
    pois.X = x_all.middleRows(n, n);
    pois.G = g_all.middleRows(n, n);
    glmm.blocks.push_back(std::move(pois));

    DataBlock binom;
    binom.kind = ResponseKind::Binomial;
    binom.z.resize(n);
    binom.aux.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const long long trials = std::max<long long>(1, rng.poisson(design.binomial_m_mean));
        binom.aux[i] = static_cast<double>(trials);
        binom.z[i] = static_cast<double>(rng.binomial(trials, logistic(y_true[2 * n + i])));
    }
    binom.X = x_all.bottomRows(n);
    binom.G = g_all.bottomRows(n);
    glmm.blocks.push_back(std::move(binom));

    glmm.beta_prior = design.prior;
    glmm.eta_prior = design.prior;
    glmm.d_beta = fixed_scale_builder(9, design.prior_scale);
    glmm.d_eta = fixed_scale_builder(basis, design.prior_scale);
    glmm.xi_alpha = design.xi_alpha;

    Study1Truth truth;
    truth.beta_true = design.beta_true;
    truth.eta_true = eta_true;
    truth.y_true = y_true;
    truth.n_per_block = n;
    return {std::move(glmm), std::move(truth)};
}

MetricReport metrics_study1(const DrawSet& set, const Study1Truth& truth) {
    const Eigen::Index n = truth.n_per_block;
    if (set.n != 3 * n) throw DimensionMismatch("draw set does not match the study truth");
    MetricReport report;
    report.rmspe.resize(3, 3);
    const char* predictors[3] = {"y_tilde", "y_hat", "y"};
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd mean = posterior_mean(set, predictors[c]);
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXd diff =
                truth.y_true.segment(k * n, n) - mean.segment(k * n, n);
            report.rmspe(k, c) = std::sqrt(diff.squaredNorm() / static_cast<double>(n));
        }
    }
    const Eigen::MatrixXd beta = draw_matrix(set, "beta");
    const Eigen::VectorXd beta_mean = beta.colwise().mean();
    report.rmse_beta = std::sqrt((truth.beta_true - beta_mean).squaredNorm() /
                                 static_cast<double>(beta.cols()));
    report.coverage_beta =
        joint_credible_region(beta, 0.95).contains(truth.beta_true) ? 1.0 : 0.0;
    report.coverage_y =
        joint_credible_region(draw_matrix(set, "y_tilde"), 0.95).contains(truth.y_true) ? 1.0
                                                                                        : 0.0;
    return report;
}

namespace {

std::pair<GlmmSpec, Eigen::VectorXd> gen_study2(Eigen::Index n, Eigen::Index r,
                                                std::uint64_t seed, ResponseKind kind) {
    if (n < 1 || r < 1) throw InvalidParams("study needs n >= 1 and r >= 1");
    RngStream rng(seed);
    Eigen::MatrixXd g(n, r);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < r; ++j) g(i, j) = rng.uniform(1.0, 20.0);

    const bool poisson = kind == ResponseKind::Poisson;
    const double intercept = poisson ? 0.5 : -5.0;
    const double loading = r == 1 ? (poisson ? 0.1 : 0.5) : (poisson ? 0.005 : 0.025);
    const Eigen::VectorXd lin =
        Eigen::VectorXd::Constant(n, intercept) + loading * g.rowwise().sum();

    DataBlock block;
    block.kind = kind;
    block.z.resize(n);
    Eigen::VectorXd mean_true(n);
    if (poisson) {
        for (Eigen::Index i = 0; i < n; ++i) {
            mean_true[i] = std::exp(lin[i]);
            block.z[i] = static_cast<double>(rng.poisson(mean_true[i]));
        }
    } else {
        block.aux = Eigen::VectorXd::Ones(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mean_true[i] = logistic(lin[i]);
            block.z[i] = rng.uniform() < mean_true[i] ? 1.0 : 0.0;
        }
    }
    block.X = Eigen::MatrixXd::Ones(n, 1);
    block.G = g;

    GlmmSpec glmm;
    glmm.blocks.push_back(std::move(block));
    // unit pseudo-count for counts; for binary data the smaller shape keeps
    // the working values on the scale of the underlying logits
    glmm.xi_alpha = poisson ? 1.0 : 0.25;
    return {std::move(glmm), std::move(mean_true)};
}

}  // namespace

std::pair<GlmmSpec, Eigen::VectorXd> gen_study2_poisson(Eigen::Index n, Eigen::Index r,
                                                        std::uint64_t seed) {
    return gen_study2(n, r, seed, ResponseKind::Poisson);
}

std::pair<GlmmSpec, Eigen::VectorXd> gen_study2_bernoulli(Eigen::Index n, Eigen::Index r,
                                                          std::uint64_t seed) {
    return gen_study2(n, r, seed, ResponseKind::Binomial);
}

double metrics_study2(const DrawSet& set, const Eigen::VectorXd& mean_true, ResponseKind kind) {
    if (set.n != mean_true.size()) throw DimensionMismatch("draw set does not match the truth");
    const Eigen::MatrixXd y_tilde = draw_matrix(set, "y_tilde");
    double mse = 0.0;
    std::vector<double> col(y_tilde.rows());
    for (Eigen::Index i = 0; i < mean_true.size(); ++i) {
        for (Eigen::Index b = 0; b < y_tilde.rows(); ++b) {
            const double v = y_tilde(b, i);
            col[b] = kind == ResponseKind::Poisson ? std::exp(v) : logistic(v);
        }
        const double estimate = sample_quantile(col, 0.5);
        mse += (estimate - mean_true[i]) * (estimate - mean_true[i]);
    }
    return mse / static_cast<double>(mean_true.size());
}

Eigen::MatrixXd synthetic_planar_adjacency(Eigen::Index n) {
    if (n < 2) throw InvalidParams("adjacency needs at least 2 areas");
    const Eigen::Index width = 8;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if ((i + 1) % width != 0 && i + 1 < n) a(i, i + 1) = a(i + 1, i) = 1.0;
        if (i + width < n) a(i, i + width) = a(i + width, i) = 1.0;
    }
    // a trailing singleton row can only happen when width divides n - 1
    if (a.row(n - 1).sum() == 0.0) a(n - 1, n - 2) = a(n - 2, n - 1) = 1.0;
    return a;
}

CarStudyData gen_car_study(Eigen::Index n_areas, std::uint64_t seed) {
    const Eigen::MatrixXd adjacency = synthetic_planar_adjacency(n_areas);
    const auto [rho_lo, rho_hi] = rho_bounds(adjacency);
    RngStream rng(seed);

    // survey variances double as covariates (standardized, with a quadratic
    // term) so the fixed effects carry most of the signal, as in areal
    // survey data where the variance tracks the response level
    Eigen::VectorXd v1(n_areas), v2(n_areas);
    for (Eigen::Index i = 0; i < n_areas; ++i) {
        v1[i] = rng.uniform(0.01, 0.09);
        v2[i] = rng.uniform(0.01, 0.09);
    }
    auto standardized = [](const Eigen::VectorXd& v) {
        const double mean = v.mean();
        const double sd = std::sqrt((v.array() - mean).square().sum() /
                                    static_cast<double>(v.size() - 1));
        return ((v.array() - mean) / sd).matrix().eval();
    };
    const Eigen::VectorXd c1 = standardized(v1);
    const Eigen::VectorXd c2 = standardized(v2);
    const Eigen::Index n = 2 * n_areas;
    Eigen::MatrixXd x_all = Eigen::MatrixXd::Zero(n, 6);
    for (Eigen::Index i = 0; i < n_areas; ++i) {
        x_all(i, 0) = 1.0;
        x_all(i, 1) = c1[i];
        x_all(i, 2) = c1[i] * c1[i];
        x_all(n_areas + i, 3) = 1.0;
        x_all(n_areas + i, 4) = c2[i];
        x_all(n_areas + i, 5) = c2[i] * c2[i];
    }
    Eigen::VectorXd beta_true(6);
    beta_true << 10.0, 1.0, -0.2, 6.0, 0.7, 0.15;

    // generative hyperparameters inside the prior's support
    const double rho_star = rho_lo + 0.85 * (rho_hi - rho_lo);
    const Eigen::MatrixXd d_eta =
        mcar_covariance_chol(0.08, 0.02, 0.7, rho_star, adjacency);
    Eigen::VectorXd unit(n);
    for (Eigen::Index i = 0; i < n; ++i) unit[i] = rng.normal();
    const Eigen::VectorXd eta_true = d_eta * unit;
    const Eigen::VectorXd y_true = x_all * beta_true + eta_true;

    GlmmSpec glmm;
    DataBlock gauss;
    gauss.kind = ResponseKind::Gaussian;
    gauss.z.resize(n_areas);
    for (Eigen::Index i = 0; i < n_areas; ++i)
        gauss.z[i] = y_true[i] + std::sqrt(v1[i]) * rng.normal();
    gauss.aux = v1;
    gauss.X = x_all.topRows(n_areas);
    glmm.blocks.push_back(std::move(gauss));

    DataBlock pois;
    pois.kind = ResponseKind::Poisson;
    pois.z.resize(n_areas);
    for (Eigen::Index i = 0; i < n_areas; ++i)
        pois.z[i] = static_cast<double>(rng.poisson(std::exp(y_true[n_areas + i])));
    pois.X = x_all.bottomRows(n_areas);
    glmm.blocks.push_back(std::move(pois));

    glmm.g_identity = true;
    glmm.beta_prior.family = DyFamily::student_t(3.0);
    glmm.beta_prior.kappa = 2.0;
    glmm.xi_alpha = 0.1;
    glmm.xi_sigma2 = 1.0;
    glmm.d_beta = iid_ig_sd_builder(glmm.theta_prior, "sigma2_beta", 6, 1.5, 0.5);
    glmm.d_eta = mcar_builder(glmm.theta_prior, "eta", adjacency, McarOptions{});
    glmm.q_prior.kind = QPriorKind::Truncated;
    glmm.q_prior.accept_rate = 0.5;

    CarStudyData out;
    out.glmm = std::move(glmm);
    out.y_true = y_true;
    out.adjacency = adjacency;
    return out;
}

LooResult loo_metrics(const std::vector<double>& obs, const std::vector<double>& preds,
                      bool log_scale) {
    if (obs.size() != preds.size() || obs.empty())
        throw DimensionMismatch("observation and prediction lengths differ");
    LooResult out;
    std::vector<double> rel, cx, cy;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        double o = obs[i];
        if (log_scale) {
            if (!(o > 0.0)) {
                ++out.skipped;
                continue;
            }
            o = std::log(o);
        }
        if (o == 0.0) {
            ++out.skipped;
            continue;
        }
        rel.push_back(std::fabs(o - preds[i]) / std::fabs(o));
        cx.push_back(o);
        cy.push_back(preds[i]);
    }
    if (rel.empty()) throw InvalidParams("no usable observations after exclusions");
    out.cv = median_of(rel);
    out.pearson = correlation(cx, cy);
    return out;
}

LooResult loo_cv(const GlmmSpec& glmm, const EprConfig& config, int block_index,
                 Eigen::Index max_block) {
    glmm.validate();
    if (block_index < 0 || block_index >= static_cast<int>(glmm.blocks.size()))
        throw InvalidParams("block index out of range");
    const Eigen::Index n_k = glmm.blocks[block_index].rows();
    if (n_k > max_block)
        throw InvalidParams("block too large for leave-one-out refits; raise max_block");

    const Eigen::Index n_total = glmm.total_n();
    const Eigen::Index rr = glmm.r();
    Eigen::Index block_offset = 0;
    for (int k = 0; k < block_index; ++k) block_offset += glmm.blocks[k].rows();

    // identity G must be materialized once rows are dropped
    auto block_g = [&](const DataBlock& b, Eigen::Index offset) -> Eigen::MatrixXd {
        if (!glmm.g_identity) return b.G;
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(b.rows(), n_total);
        for (Eigen::Index i = 0; i < b.rows(); ++i) g(i, offset + i) = 1.0;
        return g;
    };

    std::vector<double> obs(n_k), preds(n_k);
    for (Eigen::Index held = 0; held < n_k; ++held) {
        GlmmSpec sub;
        sub.g_identity = false;
        sub.beta_prior = glmm.beta_prior;
        sub.eta_prior = glmm.eta_prior;
        sub.xi_alpha = glmm.xi_alpha;
        sub.xi_sigma2 = glmm.xi_sigma2;
        sub.theta_prior = glmm.theta_prior;
        sub.d_beta = glmm.d_beta;
        sub.d_eta = glmm.d_eta;
        sub.q_prior = glmm.q_prior;

        Eigen::Index offset = 0;
        for (int k = 0; k < static_cast<int>(glmm.blocks.size()); ++k) {
            const DataBlock& b = glmm.blocks[k];
            DataBlock copy = b;
            copy.G = block_g(b, offset);
            if (k == block_index) {
                const Eigen::Index m = b.rows();
                auto drop_vec = [held, m](const Eigen::VectorXd& v) {
                    Eigen::VectorXd out(m - 1);
                    out.head(held) = v.head(held);
                    out.tail(m - 1 - held) = v.tail(m - 1 - held);
                    return out;
                };
                auto drop_rows = [held, m](const Eigen::MatrixXd& mat) {
                    Eigen::MatrixXd out(m - 1, mat.cols());
                    out.topRows(held) = mat.topRows(held);
                    out.bottomRows(m - 1 - held) = mat.bottomRows(m - 1 - held);
                    return out;
                };
                copy.z = drop_vec(b.z);
                if (b.aux.size() == m) copy.aux = drop_vec(b.aux);
                copy.X = drop_rows(b.X);
                copy.G = drop_rows(copy.G);
            }
            sub.blocks.push_back(std::move(copy));
            offset += b.rows();
        }

        EprConfig sub_config = config;
        sub_config.seed = config.seed + 7919 * static_cast<std::uint64_t>(held + 1);
        const DrawSet set = epr_run(sub, sub_config);

        const Eigen::VectorXd beta_mean = draw_matrix(set, "beta").colwise().mean();
        const Eigen::VectorXd eta_mean = draw_matrix(set, "eta").colwise().mean();
        const DataBlock& full = glmm.blocks[block_index];
        double pred = full.X.row(held).dot(beta_mean);
        if (rr > 0) {
            if (glmm.g_identity)
                pred += eta_mean[block_offset + held];
            else
                pred += full.G.row(held).dot(eta_mean);
        }
        preds[held] = pred;
        obs[held] = full.z[held];
    }
    return loo_metrics(obs, preds, glmm.blocks[block_index].kind == ResponseKind::Poisson);
}

}  // namespace epr
