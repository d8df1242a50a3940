// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Every tolerance is fixed here, in code.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "epr/experiments.hpp"
#include "epr/io.hpp"
#include "epr/special.hpp"
#include "support/quadrature.hpp"
#include "support/random_matrices.hpp"
#include "support/stats.hpp"

using namespace epr;
using namespace epr::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void run_criterion(int index, const std::string& name, double time_budget_s,
                   const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
        outcome = body();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (time_budget_s > 0.0 && elapsed > time_budget_s) {
        outcome.pass = false;
        outcome.detail += (outcome.detail.empty() ? "" : "; ");
        outcome.detail += "over time budget";
    }
    std::printf("[%s] criterion %d: %s (%.1f s%s%s)\n", outcome.pass ? "PASS" : "FAIL", index,
                name.c_str(), elapsed, outcome.detail.empty() ? "" : "; ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
}

// ---------------------------------------------------------------------------
// criterion 1: block-algebra oracle equivalence

Outcome block_algebra_equivalence() {
    RngStream rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 49);
        const Eigen::Index p = static_cast<Eigen::Index>(rng.uniform() * 6);
        const Eigen::Index r = static_cast<Eigen::Index>(rng.uniform() * 9);
        const Eigen::MatrixXd X = random_matrix(n, p, rng);
        const Eigen::MatrixXd G = random_matrix(n, r, rng);
        const ProjectionOperator op = ProjectionOperator::build(X, G);
        const Eigen::MatrixXd h = op.materialize_h();
        const Eigen::VectorXd w = random_vector(op.w_dim(), rng, 2.0);
        const Eigen::VectorXd ref = (h.transpose() * h).ldlt().solve(h.transpose() * w);
        const double scale = std::max(1.0, ref.norm());
        worst = std::max(worst, (op.apply(w) - ref).norm() / scale);
        const Eigen::VectorXd via_dense = dense_block_inverse(X, G) * (h.transpose() * w);
        worst = std::max(worst, (via_dense - ref).norm() / scale);
    }
    Outcome out;
    out.pass = worst <= 1e-8;
    std::ostringstream msg;
    msg << "max relative error " << worst;
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 2: exactness at desk scale against grid quadrature

// Pairwise density of two coordinates of zeta = M (w + shift) for the tiny
// poisson model, where w has two log-gamma coordinates (the data block) and
// three unit-gaussian coordinates (beta prior and the fine-scale block).
// The gaussian block is integrated exactly; the log-gamma pair by
// Gauss-Legendre quadrature. Everything is rebuilt from scratch here.
struct PairOracle {
    Eigen::MatrixXd density;  // grid values; rows index u, cols index v
    std::vector<double> u_axis, v_axis;
    double cell_area = 0.0;
    double mean_u = 0.0, mean_v = 0.0, var_u = 0.0, var_v = 0.0, cov_uv = 0.0;
};

PairOracle pair_oracle(const Eigen::Matrix<double, 2, 5>& a, double shape1, double shape2,
                       double u_lo, double u_hi, double v_lo, double v_hi, int grid_n,
                       int quad_n) {
    // log-gamma kernels exp(shape t - e^t), self-normalized by the same rule
    std::vector<double> t1, w1, t2, w2;
    auto kernel_range = [](double shape) {
        const double mode = std::log(shape);
        double lo = mode, hi = mode;
        auto log_k = [shape](double t) { return shape * t - std::exp(t); };
        const double peak = log_k(mode);
        while (log_k(lo) > peak - 46.0) lo -= 0.25;
        while (log_k(hi) > peak - 46.0) hi += 0.25;
        return std::pair<double, double>{lo, hi};
    };
    const auto [lo1, hi1] = kernel_range(shape1);
    const auto [lo2, hi2] = kernel_range(shape2);
    gauss_legendre(quad_n, lo1, hi1, t1, w1);
    gauss_legendre(quad_n, lo2, hi2, t2, w2);
    std::vector<double> k1(quad_n), k2(quad_n);
    double z1 = 0.0, z2 = 0.0;
    for (int i = 0; i < quad_n; ++i) {
        k1[i] = std::exp(shape1 * t1[i] - std::exp(t1[i]));
        k2[i] = std::exp(shape2 * t2[i] - std::exp(t2[i]));
        z1 += w1[i] * k1[i];
        z2 += w2[i] * k2[i];
    }

    // gaussian part: (u,v) | t is bivariate normal with mean A_L t
    const Eigen::Matrix2d a_l = a.leftCols<2>();
    const Eigen::Matrix<double, 2, 3> a_g = a.rightCols<3>();
    const Eigen::Matrix2d sigma = a_g * a_g.transpose();
    const Eigen::Matrix2d sigma_inv = sigma.inverse();
    const double norm_const =
        1.0 / (2.0 * 3.141592653589793 * std::sqrt(sigma.determinant()));

    PairOracle oracle;
    oracle.u_axis.resize(grid_n);
    oracle.v_axis.resize(grid_n);
    const double du = (u_hi - u_lo) / grid_n;
    const double dv = (v_hi - v_lo) / grid_n;
    for (int i = 0; i < grid_n; ++i) {
        oracle.u_axis[i] = u_lo + (i + 0.5) * du;
        oracle.v_axis[i] = v_lo + (i + 0.5) * dv;
    }
    oracle.cell_area = du * dv;
    oracle.density.setZero(grid_n, grid_n);

    for (int i = 0; i < quad_n; ++i) {
        for (int j = 0; j < quad_n; ++j) {
            const double weight = (w1[i] * k1[i] / z1) * (w2[j] * k2[j] / z2);
            const Eigen::Vector2d mean = a_l * Eigen::Vector2d(t1[i], t2[j]);
            for (int gu = 0; gu < grid_n; ++gu) {
                const double eu = oracle.u_axis[gu] - mean[0];
                const double qa = sigma_inv(0, 0) * eu * eu;
                const double qb = 2.0 * sigma_inv(0, 1) * eu;
                for (int gv = 0; gv < grid_n; ++gv) {
                    const double ev = oracle.v_axis[gv] - mean[1];
                    const double q = qa + qb * ev + sigma_inv(1, 1) * ev * ev;
                    oracle.density(gu, gv) += weight * norm_const * std::exp(-0.5 * q);
                }
            }
        }
    }

    const double mass = oracle.density.sum() * oracle.cell_area;
    oracle.density /= mass;
    for (int gu = 0; gu < grid_n; ++gu) {
        for (int gv = 0; gv < grid_n; ++gv) {
            const double pmass = oracle.density(gu, gv) * oracle.cell_area;
            oracle.mean_u += pmass * oracle.u_axis[gu];
            oracle.mean_v += pmass * oracle.v_axis[gv];
        }
    }
    for (int gu = 0; gu < grid_n; ++gu) {
        for (int gv = 0; gv < grid_n; ++gv) {
            const double pmass = oracle.density(gu, gv) * oracle.cell_area;
            const double eu = oracle.u_axis[gu] - oracle.mean_u;
            const double ev = oracle.v_axis[gv] - oracle.mean_v;
            oracle.var_u += pmass * eu * eu;
            oracle.var_v += pmass * ev * ev;
            oracle.cov_uv += pmass * eu * ev;
        }
    }
    return oracle;
}

Outcome exactness_desk_scale() {
    // the tiny poisson model: z = (3, 1), intercept only, point-mass theta
    GlmmSpec glmm;
    DataBlock block;
    block.kind = ResponseKind::Poisson;
    block.z = (Eigen::VectorXd(2) << 3, 1).finished();
    block.X = Eigen::MatrixXd::Ones(2, 1);
    block.G = Eigen::MatrixXd(2, 0);
    glmm.blocks.push_back(std::move(block));
    glmm.xi_alpha = 0.1;

    EprConfig config;
    config.draws = 50000;
    config.seed = 20240;
    const DrawSet set = epr_run(glmm, config);

    // independent dense route: H built literally, solved by Eigen
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(5, 3);
    h(0, 0) = h(1, 1) = 1.0;
    h(0, 2) = h(1, 2) = 1.0;
    h(2, 2) = 1.0;
    h(3, 0) = h(4, 1) = 1.0;
    const Eigen::MatrixXd m =
        (h.transpose() * h).ldlt().solve(Eigen::MatrixXd(h.transpose()));

    // rows of m: (xi_1, xi_2, beta); w columns: (e1, e2, beta, xi1, xi2)
    Eigen::Matrix<double, 2, 5> pair_bxi1, pair_bxi2;
    // reorder columns so log-gamma coordinates lead and gaussians follow
    const int cols[5] = {0, 1, 2, 3, 4};
    for (int c = 0; c < 5; ++c) {
        pair_bxi1(0, c) = m(2, cols[c]);
        pair_bxi1(1, c) = m(0, cols[c]);
        pair_bxi2(0, c) = m(2, cols[c]);
        pair_bxi2(1, c) = m(1, cols[c]);
    }

    // grid windows sized from the coordinate moments through the linear map
    Eigen::VectorXd w_mean(5), w_var(5);
    for (int i = 0; i < 2; ++i) {
        const double shape = glmm.blocks[0].z[i] + glmm.xi_alpha;
        w_mean[i] = digamma(shape);
        w_var[i] = trigamma(shape);
    }
    for (int i = 2; i < 5; ++i) {
        w_mean[i] = 0.0;
        w_var[i] = 1.0;
    }
    const Eigen::Vector3d zeta_mean = m * w_mean;              // (xi1, xi2, beta)
    const Eigen::Vector3d zeta_sd =
        (m * w_var.asDiagonal() * m.transpose()).diagonal().cwiseSqrt();

    const int grid_n = 200, quad_n = 72;
    const double span = 8.0;
    const PairOracle ora1 = pair_oracle(
        pair_bxi1, 3.1, 1.1, zeta_mean[2] - span * zeta_sd[2], zeta_mean[2] + span * zeta_sd[2],
        zeta_mean[0] - span * zeta_sd[0], zeta_mean[0] + span * zeta_sd[0], grid_n, quad_n);
    const PairOracle ora2 = pair_oracle(
        pair_bxi2, 3.1, 1.1, zeta_mean[2] - span * zeta_sd[2], zeta_mean[2] + span * zeta_sd[2],
        zeta_mean[1] - span * zeta_sd[1], zeta_mean[1] + span * zeta_sd[1], grid_n, quad_n);

    // empirical moments with Monte Carlo standard errors
    const long long b = config.draws;
    std::vector<double> beta(b), xi1(b), xi2(b);
    for (long long i = 0; i < b; ++i) {
        beta[i] = set.draws[i].beta[0];
        xi1[i] = set.draws[i].xi[0];
        xi2[i] = set.draws[i].xi[1];
    }
    Outcome out;
    std::ostringstream msg;
    auto check_moments = [&](const std::vector<double>& u, const std::vector<double>& v,
                             const PairOracle& oracle, const char* tag) {
        const double mu = mean_of(u), mv = mean_of(v);
        const double vu = var_of(u), vv = var_of(v);
        double cuv = 0.0, m4u = 0.0, m4v = 0.0, vprod = 0.0;
        for (long long i = 0; i < b; ++i) {
            cuv += (u[i] - mu) * (v[i] - mv);
            m4u += std::pow(u[i] - mu, 4.0);
            m4v += std::pow(v[i] - mv, 4.0);
        }
        cuv /= (b - 1);
        m4u /= b;
        m4v /= b;
        for (long long i = 0; i < b; ++i)
            vprod += std::pow((u[i] - mu) * (v[i] - mv) - cuv, 2.0);
        vprod /= b;
        struct Row {
            double got, want, se;
            const char* what;
        } rows[] = {
            {mu, oracle.mean_u, std::sqrt(vu / b), "mean"},
            {mv, oracle.mean_v, std::sqrt(vv / b), "mean"},
            {vu, oracle.var_u, std::sqrt(std::max(m4u - vu * vu, 0.0) / b), "var"},
            {vv, oracle.var_v, std::sqrt(std::max(m4v - vv * vv, 0.0) / b), "var"},
            {cuv, oracle.cov_uv, std::sqrt(vprod / b), "cov"},
        };
        for (const auto& row : rows) {
            if (std::fabs(row.got - row.want) > 3.0 * row.se) {
                out.pass = false;
                msg << tag << " " << row.what << " off: " << row.got << " vs " << row.want
                    << " (se " << row.se << "); ";
            }
        }
    };
    check_moments(beta, xi1, ora1, "beta/xi1");
    check_moments(beta, xi2, ora2, "beta/xi2");

    // chi-squared goodness of fit on a 10x10 partition of (beta, xi1) at
    // oracle decile edges
    const int cells = 10;
    std::vector<double> u_cdf(grid_n, 0.0), v_cdf(grid_n, 0.0);
    for (int gu = 0; gu < grid_n; ++gu)
        for (int gv = 0; gv < grid_n; ++gv) {
            u_cdf[gu] += ora1.density(gu, gv) * ora1.cell_area;
            v_cdf[gv] += ora1.density(gu, gv) * ora1.cell_area;
        }
    for (int i = 1; i < grid_n; ++i) {
        u_cdf[i] += u_cdf[i - 1];
        v_cdf[i] += v_cdf[i - 1];
    }
    // edges sit on grid-column boundaries so the oracle's cell masses and
    // the draw binning partition identically
    auto decile_edges = [&](const std::vector<double>& cdf, const std::vector<double>& axis) {
        const double step = axis[1] - axis[0];
        std::vector<double> edges;
        for (int k = 1; k < cells; ++k) {
            const double target = static_cast<double>(k) / cells;
            int idx = 0;
            while (idx + 1 < grid_n && cdf[idx] < target) ++idx;
            edges.push_back(axis[idx] + 0.5 * step);
        }
        return edges;
    };
    const std::vector<double> u_edges = decile_edges(u_cdf, ora1.u_axis);
    const std::vector<double> v_edges = decile_edges(v_cdf, ora1.v_axis);
    auto cell_of = [&](double x, const std::vector<double>& edges) {
        int c = 0;
        while (c < cells - 1 && x > edges[c]) ++c;
        return c;
    };
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(cells, cells);
    for (int gu = 0; gu < grid_n; ++gu)
        for (int gv = 0; gv < grid_n; ++gv)
            expected(cell_of(ora1.u_axis[gu], u_edges), cell_of(ora1.v_axis[gv], v_edges)) +=
                ora1.density(gu, gv) * ora1.cell_area;
    Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(cells, cells);
    for (long long i = 0; i < b; ++i)
        observed(cell_of(beta[i], u_edges), cell_of(xi1[i], v_edges)) += 1.0;
    double stat = 0.0;
    for (int cu = 0; cu < cells; ++cu)
        for (int cv = 0; cv < cells; ++cv) {
            const double e = expected(cu, cv) * static_cast<double>(b);
            stat += (observed(cu, cv) - e) * (observed(cu, cv) - e) / e;
        }
    const double pvalue = chi_squared_sf(stat, cells * cells - 1);
    msg << "chi2 " << stat << " p " << pvalue;
    if (pvalue < 0.01) out.pass = false;
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 3: saturated-model conjugacy per data kind

Outcome saturated_conjugacy() {
    GlmmSpec glmm;
    const Eigen::MatrixXd x1 = Eigen::MatrixXd::Ones(3, 1);
    const Eigen::MatrixXd g0(3, 0);
    DataBlock gauss;
    gauss.kind = ResponseKind::Gaussian;
    gauss.z = (Eigen::VectorXd(3) << 0.5, -1.0, 2.0).finished();
    gauss.aux = (Eigen::VectorXd(3) << 1.0, 0.5, 2.0).finished();
    gauss.X = x1;
    gauss.G = g0;
    glmm.blocks.push_back(gauss);
    DataBlock pois;
    pois.kind = ResponseKind::Poisson;
    pois.z = (Eigen::VectorXd(3) << 3, 0, 7).finished();
    pois.X = x1;
    pois.G = g0;
    glmm.blocks.push_back(pois);
    DataBlock binom;
    binom.kind = ResponseKind::Binomial;
    binom.z = (Eigen::VectorXd(3) << 2, 0, 5).finished();
    binom.aux = (Eigen::VectorXd(3) << 4, 3, 6).finished();
    binom.X = x1;
    binom.G = g0;
    glmm.blocks.push_back(binom);
    DataBlock st;
    st.kind = ResponseKind::StudentT;
    st.z = (Eigen::VectorXd(3) << 1.5, -0.5, 4.0).finished();
    st.nu = 4.0;
    st.X = x1;
    st.G = g0;
    glmm.blocks.push_back(st);
    glmm.xi_alpha = 0.1;

    const PosteriorGcm post = assemble_posterior(glmm);
    EprConfig config;
    config.draws = 4000;
    config.seed = 30303;
    const DrawSet set = epr_run(post, config);

    Outcome out;
    std::ostringstream msg;
    int case_index = 0;
    double min_p = 1.0;
    Eigen::Index at = 0;
    for (const auto& [kind, size] : post.block_layout) {
        for (Eigen::Index i = 0; i < size; ++i, ++at, ++case_index) {
            std::vector<double> reps(set.draws.size());
            for (std::size_t d = 0; d < set.draws.size(); ++d) reps[d] = set.draws[d].y_rep[at];
            RngStream fresh(40404 + case_index);
            std::vector<double> direct(reps.size());
            const DyParams params{post.psi_M[at], post.alpha_M[at], post.kappa_M[at]};
            const double shift = post.w_shift[at];
            for (auto& v : direct) v = shift + dy_sample(params, fresh);
            const double p = ks_two_sample_pvalue(reps, direct);
            min_p = std::min(min_p, p);
            if (p < 0.01 / 12.0) out.pass = false;
        }
    }
    msg << "12 KS cases, min p " << min_p << " vs Bonferroni cut " << 0.01 / 12.0;
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 4: residual statistic equals the explicit-complement trace form

Outcome g_identity_check() {
    RngStream rng(4004);
    double worst = 0.0;
    for (int instance = 0; instance < 5; ++instance) {
        const Eigen::Index n = 4 + instance, p = 2, r = 3;
        const Eigen::MatrixXd X = random_matrix(n, p, rng);
        const Eigen::MatrixXd G = random_matrix(n, r, rng);
        const ProjectionOperator op = ProjectionOperator::build(X, G);
        const Eigen::MatrixXd q = op.materialize_q_complement();
        for (int trial = 0; trial < 50; ++trial) {
            const Eigen::VectorXd w = random_vector(op.w_dim(), rng, 2.0);
            const double g = residual_g(op, w, op.apply(w));
            const Eigen::VectorXd qq_w = q * (q.transpose() * w);
            const double g_trace = qq_w.head(n).squaredNorm();
            worst = std::max(worst, std::fabs(g - g_trace));
        }
    }
    Outcome out;
    out.pass = worst <= 1e-10;
    std::ostringstream msg;
    msg << "max |g - trace form| " << worst;
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criteria 5 and 7: desk-scale three-type study ordering, coverage, and
// serial independence of the beta draws

struct Study1Results {
    int ordering_ok[3] = {0, 0, 0};
    int coverage_ok = 0;
    int autocorr_violations = 0;
    int autocorr_tests = 0;
    double max_abs_autocorr = 0.0;
    int replicates = 0;
};

Study1Results study1_results;

Outcome table1_ordering() {
    Study1Results& res = study1_results;
    res.replicates = 10;
    const long long b = 100;
    for (int rep = 0; rep < res.replicates; ++rep) {
        Study1Design design;
        auto [glmm, truth] = gen_study1(design, 50000 + 100 * rep);
        EprConfig config;
        config.draws = b;
        config.seed = 51000 + 100 * rep;
        config.acceptance = AcceptanceSetting::rate(0.5);
        const DrawSet set = epr_run(glmm, config);
        const MetricReport report = metrics_study1(set, truth);
        for (int k = 0; k < 3; ++k)
            if (report.rmspe(k, 0) < report.rmspe(k, 1) && report.rmspe(k, 1) < report.rmspe(k, 2))
                ++res.ordering_ok[k];
        if (report.coverage_beta == 1.0) ++res.coverage_ok;

        const Eigen::MatrixXd beta = draw_matrix(set, "beta");
        for (Eigen::Index j = 0; j < beta.cols(); ++j) {
            const double mean = beta.col(j).mean();
            double num = 0.0, den = 0.0;
            for (Eigen::Index i = 0; i < beta.rows(); ++i) {
                den += (beta(i, j) - mean) * (beta(i, j) - mean);
                if (i + 1 < beta.rows()) num += (beta(i, j) - mean) * (beta(i + 1, j) - mean);
            }
            const double rho = num / den;
            ++res.autocorr_tests;
            res.max_abs_autocorr = std::max(res.max_abs_autocorr, std::fabs(rho));
            if (std::fabs(rho) > 3.0 / std::sqrt(static_cast<double>(b)))
                ++res.autocorr_violations;
        }
    }
    Outcome out;
    std::ostringstream msg;
    msg << "ordering per k: " << res.ordering_ok[0] << "/" << res.ordering_ok[1] << "/"
        << res.ordering_ok[2] << " of 10, coverage " << res.coverage_ok << "/10";
    out.detail = msg.str();
    out.pass = res.ordering_ok[0] >= 8 && res.ordering_ok[1] >= 8 && res.ordering_ok[2] >= 8 &&
               res.coverage_ok >= 9;
    return out;
}

Outcome independence_property() {
    const Study1Results& res = study1_results;
    Outcome out;
    // 90 correlations at a 3-sigma band; allow the multiplicity the other
    // corrected checks use (at most 2 crossings; 3+ signals real dependence)
    out.pass = res.replicates == 10 && res.autocorr_violations <= 2;
    std::ostringstream msg;
    msg << res.autocorr_violations << " of " << res.autocorr_tests
        << " lag-1 correlations beyond 3/sqrt(B), max |rho| " << res.max_abs_autocorr;
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 6: single-type regression accuracy at n = 100

Outcome table2_epr_arm() {
    const int replicates = 20;
    double mse_p_sum = 0.0, mse_lambda_sum = 0.0;
    for (int rep = 0; rep < replicates; ++rep) {
        EprConfig config;
        config.draws = 600;
        config.acceptance = AcceptanceSetting::rate(0.5);

        auto [pois, lambda_true] = gen_study2_poisson(100, 1, 60000 + 31 * rep);
        config.seed = 61000 + 31 * rep;
        mse_lambda_sum += metrics_study2(epr_run(pois, config), lambda_true,
                                         ResponseKind::Poisson);

        auto [bern, p_true] = gen_study2_bernoulli(100, 1, 62000 + 31 * rep);
        config.seed = 63000 + 31 * rep;
        mse_p_sum += metrics_study2(epr_run(bern, config), p_true, ResponseKind::Binomial);
    }
    const double avg_mse_lambda = mse_lambda_sum / replicates;
    const double avg_mse_p = mse_p_sum / replicates;
    Outcome out;
    out.pass = avg_mse_p <= 0.005 && avg_mse_lambda <= 0.30;
    std::ostringstream msg;
    msg << "avg MSE_p " << avg_mse_p << " (<= 0.005), avg MSE_lambda " << avg_mse_lambda
        << " (<= 0.30)";
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// criterion 8: byte-identical draw files across worker counts

Outcome determinism_across_workers() {
    auto [glmm, lambda_true] = gen_study2_poisson(100, 1, 808);
    (void)lambda_true;
    const auto dir = std::filesystem::temp_directory_path() / "epr_acceptance";
    std::filesystem::create_directories(dir);
    std::string paths[2];
    for (int i = 0; i < 2; ++i) {
        EprConfig config;
        config.draws = 200;
        config.seed = 4242;
        config.acceptance = AcceptanceSetting::rate(0.5);
        config.workers = i == 0 ? 1 : 4;
        const DrawSet set = epr_run(glmm, config);
        paths[i] = (dir / ("draws_w" + std::to_string(config.workers) + ".csv")).string();
        io::write_draws_csv(paths[i], set);
    }
    std::ifstream a(paths[0], std::ios::binary), b(paths[1], std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    Outcome out;
    out.pass = !sa.str().empty() && sa.str() == sb.str();
    out.detail = out.pass ? "files identical" : "files differ";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 9: throughput at N = 30000, p = 9, r = 100

Outcome throughput_sanity() {
    const Eigen::Index n = 30000, p = 9, r = 100;
    RngStream rng(909);
    const Eigen::MatrixXd X = random_matrix(n, p, rng, 1.0);
    const Eigen::MatrixXd G = random_matrix(n, r, rng, 0.3);
    const Eigen::VectorXd beta_star = random_vector(p, rng);
    GlmmSpec glmm;
    DataBlock block;
    block.kind = ResponseKind::Gaussian;
    block.z = X * beta_star;
    for (Eigen::Index i = 0; i < n; ++i) block.z[i] += rng.normal();
    block.aux = Eigen::VectorXd::Ones(n);
    block.X = X;
    block.G = G;
    glmm.blocks.push_back(std::move(block));

    EprConfig config;
    config.draws = 100;
    config.seed = 90909;
    config.acceptance = AcceptanceSetting::rate(0.5);
    config.workers = 1;
    const auto start = Clock::now();
    const DrawSet set = epr_run(glmm, config);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    Outcome out;
    out.pass = set.draws.size() == 100 && elapsed < 120.0;
    std::ostringstream msg;
    msg << "100 accepted draws in " << elapsed << " s single-worker";
    out.detail = msg.str();
    return out;
}

// ---------------------------------------------------------------------------
// areal pipeline property run (leave-one-out on self-generated data)

Outcome areal_pipeline() {
    const CarStudyData data = gen_car_study(67, 777);
    EprConfig config;
    config.draws = 100;
    config.seed = 778;
    Outcome out;
    std::ostringstream msg;
    for (int k = 0; k < 2; ++k) {
        const LooResult res = loo_cv(data.glmm, config, k);
        msg << "block " << (k + 1) << ": cv " << res.cv << ", corr " << res.pearson << "; ";
        if (!std::isfinite(res.cv) || !(res.pearson > 0.8)) out.pass = false;
    }
    out.detail = msg.str();
    return out;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    run_criterion(1, "block-algebra oracle equivalence", 10.0, block_algebra_equivalence);
    run_criterion(2, "exact sampling vs grid quadrature", 60.0, exactness_desk_scale);
    run_criterion(3, "saturated-model conjugacy", 30.0, saturated_conjugacy);
    run_criterion(4, "residual statistic trace identity", 0.0, g_identity_check);
    run_criterion(5, "three-type study ordering and coverage", 600.0, table1_ordering);
    run_criterion(6, "single-type regression accuracy", 900.0, table2_epr_arm);
    run_criterion(7, "serial independence of draws", 0.0, independence_property);
    run_criterion(8, "worker-count determinism", 0.0, determinism_across_workers);
    run_criterion(9, "throughput sanity", 150.0, throughput_sanity);
    run_criterion(10, "areal leave-one-out pipeline", 0.0, areal_pipeline);
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
