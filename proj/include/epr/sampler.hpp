#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "epr/model.hpp"

namespace epr {

// How proposals are filtered on the residual statistic g: either keep
// everything below an explicit omega (infinity accepts all), or target an
// acceptance rate by sampling B/rate proposals and keeping the B smallest,
// which estimates omega as the rate-quantile of g. Default defers to the
// model's q prior.
struct AcceptanceSetting {
    enum class Mode { Default, Rate, Omega };
    Mode mode = Mode::Default;
    double value = std::numeric_limits<double>::infinity();

    static AcceptanceSetting rate(double p) { return {Mode::Rate, p}; }
    static AcceptanceSetting omega(double w) { return {Mode::Omega, w}; }
};

struct EprConfig {
    long long draws = 100;  // B
    AcceptanceSetting acceptance;
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
};

struct Draw {
    Theta theta;
    Eigen::VectorXd xi;
    Eigen::VectorXd beta;
    Eigen::VectorXd eta;
    Eigen::VectorXd y_rep;    // saturated-model replicate, first N entries of w
    Eigen::VectorXd y_hat;    // X beta + G eta + xi
    Eigen::VectorXd y_tilde;  // X beta + G eta
    double g = 0.0;           // ||y_rep - y_hat||^2
    long long proposal_index = 0;
};

struct DrawSet {
    std::vector<Draw> draws;
    EprConfig config;
    double omega_used = std::numeric_limits<double>::infinity();
    long long proposals_made = 0;
    std::vector<std::string> theta_names;
    Eigen::Index n = 0, p = 0, r = 0;
};

// theta ~ pi and w = D(theta) w_M + shift with independent DY coordinates;
// the first N entries of w are the saturated-model replicate.
std::pair<Theta, Eigen::VectorXd> simulate_w(const PosteriorGcm& post, RngStream& rng);

// The full loop: precompute the projection once, then per proposal simulate
// w, project, assemble the three predictors, and filter on g. Proposal i
// draws from substream(seed, i), so results do not depend on the worker
// count and reruns are reproducible.
DrawSet epr_run(const PosteriorGcm& post, const EprConfig& config);
DrawSet epr_run(const GlmmSpec& glmm, const EprConfig& config);

// B x dim matrix of one target across accepted draws; targets: y, y_hat,
// y_tilde, beta, eta, xi.
Eigen::MatrixXd draw_matrix(const DrawSet& set, const std::string& target);

struct SummaryRow {
    std::string target;
    Eigen::Index coord = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::vector<double> quantiles;
};

std::vector<SummaryRow> summarize(const DrawSet& set, const std::vector<std::string>& targets,
                                  const std::vector<double>& probs);

// Per-coordinate intervals mean_i +- C sd_i with the smallest draw-implied C
// such that at least `level` of the draws fall inside every interval at once.
struct JointRegion {
    Eigen::VectorXd center;
    Eigen::VectorXd sd;
    double c = 0.0;
    double level = 0.0;

    double lower(Eigen::Index i) const { return center[i] - c * sd[i]; }
    double upper(Eigen::Index i) const { return center[i] + c * sd[i]; }
    bool contains(const Eigen::VectorXd& x) const;
};

JointRegion joint_credible_region(const Eigen::MatrixXd& draws, double level);

// Type-7 quantile of a sample.
double sample_quantile(std::vector<double> x, double prob);

}  // namespace epr
