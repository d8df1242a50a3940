#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "epr/dy.hpp"
#include "epr/rng.hpp"

namespace epr {

// Realized hyperparameter vector; component meaning is fixed by the prior
// that produced it. Empty for point-mass specifications.
struct Theta {
    Eigen::VectorXd values;
};

// Invertible block-diagonal operator D(theta).
class BlockDiagOp {
public:
    struct Block {
        enum class Form { ScaledIdentity, Diagonal, LowerTriangular, Dense };
        Form form = Form::ScaledIdentity;
        Eigen::Index n = 0;
        double scale = 1.0;
        Eigen::VectorXd diag;
        Eigen::MatrixXd mat;
    };

    static Block identity_block(Eigen::Index n) { return {Block::Form::ScaledIdentity, n, 1.0, {}, {}}; }
    static Block scaled_block(Eigen::Index n, double s);
    static Block diagonal_block(Eigen::VectorXd d);
    static Block lower_triangular_block(Eigen::MatrixXd m);
    static Block dense_block(Eigen::MatrixXd m);

    void add(Block b);

    Eigen::Index dim() const { return dim_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
    double log_abs_det() const;
    const std::vector<Block>& blocks() const { return blocks_; }
    Eigen::MatrixXd to_dense() const;

private:
    std::vector<Block> blocks_;
    Eigen::Index dim_ = 0;
};

// The covariance-parameter map V of the transformation y = mu + V D(theta) w.
class VOperator {
public:
    virtual ~VOperator() = default;
    virtual Eigen::Index dim() const = 0;
    virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;   // V x
    virtual Eigen::VectorXd solve(const Eigen::VectorXd& y) const = 0;   // V^{-1} y
    virtual double log_abs_det() const = 0;                              // log |det V|
    // Dense V^{-1}, used by conditional-density evaluation on test-sized specs.
    virtual Eigen::MatrixXd inverse_dense() const = 0;
};

std::shared_ptr<const VOperator> identity_v(Eigen::Index n);
std::shared_ptr<const VOperator> dense_v(const Eigen::MatrixXd& v);

// Full GCM specification: per-coordinate shapes/scales/unit families, a
// location vector, the structured linear map V, the theta-dependent
// block-diagonal D, and the hyperprior sampler. Immutable after
// construction; sharable across concurrent samplers.
struct GcmSpec {
    Eigen::VectorXd alpha;
    Eigen::VectorXd kappa;
    Eigen::VectorXd mu;
    std::vector<DyFamily> psi;
    std::shared_ptr<const VOperator> v;
    std::function<BlockDiagOp(const Theta&)> d_builder;   // theta -> D(theta)
    std::function<Theta(RngStream&)> theta_prior;          // pi sampler

    Eigen::Index dim() const { return alpha.size(); }
    DyParams coord_params(Eigen::Index i) const { return {psi[i], alpha[i], kappa[i]}; }
    void validate() const;

    // Spec with point-mass theta and D = I.
    static GcmSpec plain(Eigen::VectorXd alpha, Eigen::VectorXd kappa, Eigen::VectorXd mu,
                         std::vector<DyFamily> psi, std::shared_ptr<const VOperator> v);
};

struct TruncationRegion {
    std::function<bool(const Eigen::VectorXd&)> predicate;
    std::string description;
};

// theta ~ pi, w independent DY draws, y = mu + V D(theta) w.
std::pair<Theta, Eigen::VectorXd> gcm_sample(const GcmSpec& spec, RngStream& rng);

// Log of the fixed-theta integrand: change of variables through D and V.
double gcm_log_density_given_theta(const GcmSpec& spec, const Eigen::VectorXd& y,
                                   const Theta& theta);

// Rejection sampler for the region-truncated GCM; throws ExhaustedError once
// max_tries proposals fail the predicate.
std::pair<Theta, Eigen::VectorXd> truncated_gcm_sample(const GcmSpec& spec,
                                                       const TruncationRegion& region,
                                                       long long max_tries, RngStream& rng);

inline std::pair<Theta, Eigen::VectorXd> truncated_gcm_sample(const GcmSpec& spec,
                                                              const TruncationRegion& region,
                                                              RngStream& rng) {
    return truncated_gcm_sample(spec, region, 1000000, rng);
}

// Unnormalized log conditional density of the leading block y1 given the
// trailing block y2, at fixed theta. Direct simulation from this
// distribution is not available; evaluation only.
double cgcm_log_density_given_theta(const GcmSpec& spec, const Eigen::VectorXd& y1,
                                    const Eigen::VectorXd& y2, const Theta& theta);

}  // namespace epr
