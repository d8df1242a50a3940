#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "epr/sampler.hpp"

namespace epr {

// Three-type simulation design: quadratic fixed effects per response type,
// exponential radial basis columns orthogonalized against X, and one block
// each of gaussian, poisson and binomial data.
struct Study1Design {
    Eigen::Index n_per_block = 500;
    Eigen::Index basis_count = 20;
    Eigen::VectorXd beta_true;
    double sigma_true_sq = 1.0;
    double binomial_m_mean = 20.0;
    // default: iid normal with the empirical variance of the X beta entries
    std::optional<double> eta_sd_override;
    PriorSpec prior;          // applied to both beta and eta
    double prior_scale = 2.0; // D_beta = D_eta = scale * I
    double xi_alpha = 1.0;

    Study1Design();
};

struct Study1Truth {
    Eigen::VectorXd beta_true;
    Eigen::VectorXd eta_true;
    Eigen::VectorXd y_true;  // stacked over the three blocks
    Eigen::Index n_per_block = 0;
};

std::pair<GlmmSpec, Study1Truth> gen_study1(const Study1Design& design, std::uint64_t seed);

struct MetricReport {
    // rows: block k; cols: predictors y_tilde, y_hat, y
    Eigen::MatrixXd rmspe;
    double rmse_beta = std::numeric_limits<double>::quiet_NaN();
    double coverage_beta = std::numeric_limits<double>::quiet_NaN();  // 0/1 per replicate
    double coverage_y = std::numeric_limits<double>::quiet_NaN();     // via y_tilde intervals
    double mse_lambda = std::numeric_limits<double>::quiet_NaN();
    double mse_p = std::numeric_limits<double>::quiet_NaN();
    double cv = std::numeric_limits<double>::quiet_NaN();
    double pearson = std::numeric_limits<double>::quiet_NaN();
    int cv_skipped = 0;
    double cpu_seconds = std::numeric_limits<double>::quiet_NaN();
};

MetricReport metrics_study1(const DrawSet& set, const Study1Truth& truth);

// Single-block regression designs with uniform covariates on (1, 20). With
// r = 1 the linear predictors are 0.5 + 0.1 g (poisson) and -5 + 0.5 g
// (bernoulli); for larger r the per-covariate loadings are 0.005 and 0.025.
// Returns the spec and the true mean on the inverse-link scale.
std::pair<GlmmSpec, Eigen::VectorXd> gen_study2_poisson(Eigen::Index n, Eigen::Index r,
                                                        std::uint64_t seed);
std::pair<GlmmSpec, Eigen::VectorXd> gen_study2_bernoulli(Eigen::Index n, Eigen::Index r,
                                                          std::uint64_t seed);

// Mean squared error of posterior medians on the inverse-link scale of the
// smooth predictor.
double metrics_study2(const DrawSet& set, const Eigen::VectorXd& mean_true, ResponseKind kind);

// Grid-style planar adjacency over n areas (row width 8), connected.
Eigen::MatrixXd synthetic_planar_adjacency(Eigen::Index n);

// Two-response areal study: gaussian block with known heteroskedastic
// variances plus a count block, identity G, coregionalized CAR prior on eta,
// inverse-gamma variance components on beta. Data generated from the model's
// own form at fixed hyperparameter values.
struct CarStudyData {
    GlmmSpec glmm;
    Eigen::VectorXd y_true;
    Eigen::MatrixXd adjacency;
};

CarStudyData gen_car_study(Eigen::Index n_areas, std::uint64_t seed);

struct LooResult {
    double cv = std::numeric_limits<double>::quiet_NaN();
    double pearson = std::numeric_limits<double>::quiet_NaN();
    int skipped = 0;  // observations excluded from the relative-error median
};

// Median relative leave-one-out error and observation/prediction correlation
// for the helper below.
LooResult loo_metrics(const std::vector<double>& obs, const std::vector<double>& preds,
                      bool log_scale);

// Refits the model once per held-out observation of block `block_index` and
// scores E_{-i}[y_tilde_i] against the observation (log scale for count
// blocks). Guarded against large blocks since it performs n_k refits.
LooResult loo_cv(const GlmmSpec& glmm, const EprConfig& config, int block_index,
                 Eigen::Index max_block = 500);

}  // namespace epr
