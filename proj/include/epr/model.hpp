#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epr/gcm.hpp"
#include "epr/projection.hpp"

namespace epr {

// Observed response types; each maps onto the unit family of its latent
// natural parameter.
enum class ResponseKind { Gaussian, Poisson, Binomial, StudentT };

const char* response_kind_name(ResponseKind kind);
ResponseKind response_kind_from_name(const std::string& name);
DyFamily response_family(ResponseKind kind, double nu);

// One homogeneous slice of data: z plus its per-kind auxiliaries and the
// rows of X and G it owns.
struct DataBlock {
    ResponseKind kind = ResponseKind::Gaussian;
    Eigen::VectorXd z;
    Eigen::VectorXd aux;   // Gaussian: known variances; Binomial: trial counts
    double nu = 0.0;       // StudentT degrees of freedom
    Eigen::MatrixXd X;     // n_k x p
    Eigen::MatrixXd G;     // n_k x r; ignored when the model declares identity G

    Eigen::Index rows() const { return z.size(); }
    bool variances_known() const { return aux.size() == z.size(); }
    void validate(Eigen::Index p, Eigen::Index r, bool g_identity) const;
};

// Gaussian block with unknown variances, re-expressed as shifted Student-t
// data with the chosen degrees of freedom.
DataBlock marginalize_gaussian_variance(const DataBlock& block, double nu);

// Unit-family prior class for beta or eta; alpha/kappa broadcast over
// coordinates.
struct PriorSpec {
    DyFamily family = DyFamily::gaussian();
    double alpha = 0.0;
    double kappa = 0.5;
    void validate() const { DyParams{family, alpha, kappa}.validate(); }
};

// One independent component of pi(theta).
struct ThetaComponent {
    enum class Kind { InverseGamma, UniformRho, StudentT, PointMass };
    Kind kind = Kind::PointMass;
    std::string name;
    double shape = 0.0, rate = 0.0;  // InverseGamma
    double df = 0.0;                 // StudentT
    double value = 0.0;              // PointMass
    double lo = 0.0, hi = 0.0;       // UniformRho support

    double sample(RngStream& rng) const;
};

struct ThetaPrior {
    std::vector<ThetaComponent> components;

    int add(ThetaComponent c);
    Theta sample(RngStream& rng) const;
    std::vector<std::string> names() const;
    Eigen::Index size() const { return static_cast<Eigen::Index>(components.size()); }
};

using DBlockBuilder = std::function<BlockDiagOp::Block(const Theta&)>;

DBlockBuilder fixed_scale_builder(Eigen::Index n, double scale);
DBlockBuilder fixed_diag_builder(Eigen::VectorXd diag);
// Per-coordinate variances v_i ~ IG(shape, rate); D block = diag(sqrt(v_i)).
DBlockBuilder iid_ig_sd_builder(ThetaPrior& prior, const std::string& base_name, Eigen::Index n,
                                double shape, double rate);
// One shared variance v ~ IG(shape, rate); D block = sqrt(v) I_n.
DBlockBuilder scalar_ig_sd_builder(ThetaPrior& prior, const std::string& name, Eigen::Index n,
                                   double shape, double rate);

// Conditional-autoregressive machinery over a binary adjacency.
Eigen::MatrixXd car_precision(const Eigen::MatrixXd& adjacency, double rho);
std::pair<double, double> rho_bounds(const Eigen::MatrixXd& adjacency);
// Lower Cholesky factor of the two-component coregionalized covariance:
// base component sigma1^2 (D_a - rho A)^{-1}, second component gamma times
// the base plus sigma2^2 I.
Eigen::MatrixXd mcar_covariance_chol(double sigma1_sq, double sigma2_sq, double gamma, double rho,
                                     const Eigen::MatrixXd& adjacency);

struct McarOptions {
    std::optional<double> rho_fixed;     // default: uniform over the PD range
    std::optional<double> sigma1_fixed;  // default: IG(ig_shape, ig_rate)
    std::optional<double> sigma2_fixed;
    std::optional<double> gamma_fixed;   // default: Student-t(gamma_df)
    double ig_shape = 3.0;
    double ig_rate = 2.0;
    double gamma_df = 3.0;
};

// eta covers two stacked components over the areas of `adjacency`
// (r = 2 * n_areas); registers rho/sigma/gamma components on `prior`.
DBlockBuilder mcar_builder(ThetaPrior& prior, const std::string& base_name,
                           const Eigen::MatrixXd& adjacency, const McarOptions& opts);

enum class QPriorKind { Improper, PointMassZero, Truncated };

struct QPrior {
    QPriorKind kind = QPriorKind::Improper;
    std::optional<double> omega;        // Truncated with explicit bound
    std::optional<double> accept_rate;  // Truncated via target acceptance rate
};

// User-facing model: data blocks in fixed kind order (Gaussian, Poisson,
// Binomial, StudentT; absent kinds dropped), the prior classes on beta and
// eta, fine-scale settings, and the composite hyperprior. Immutable once
// validated.
struct GlmmSpec {
    std::vector<DataBlock> blocks;
    bool g_identity = false;
    PriorSpec beta_prior;
    PriorSpec eta_prior;
    double xi_alpha = 0.1;
    double xi_sigma2 = 1.0;
    ThetaPrior theta_prior;
    DBlockBuilder d_beta;  // defaults to identity at validation
    DBlockBuilder d_eta;
    QPrior q_prior;

    Eigen::Index total_n() const;
    Eigen::Index p() const;
    Eigen::Index r() const;
    void validate() const;
};

struct RealizedTheta {
    Theta theta;
    BlockDiagOp::Block d_beta;
    BlockDiagOp::Block d_eta;
};

// Independent component draws with the D builders evaluated.
RealizedTheta sample_theta(const GlmmSpec& glmm, RngStream& rng);

// The posterior over (zeta', q')' in structured form: per-coordinate shapes,
// scales and unit families of w, the additive data shift entering w, the
// projection factors for V, and the theta machinery for D.
struct PosteriorGcm {
    Eigen::VectorXd alpha_M;
    Eigen::VectorXd kappa_M;
    std::vector<DyFamily> psi_M;
    Eigen::VectorXd w_shift;  // z4 placed in the Student-t data coordinates
    ProjectionOperator op;
    ThetaPrior theta_prior;
    DBlockBuilder d_beta;
    DBlockBuilder d_eta;
    double sigma_xi = 1.0;
    Eigen::Index N = 0, p = 0, r = 0;
    std::vector<std::pair<ResponseKind, Eigen::Index>> block_layout;
    QPrior q_prior;

    Eigen::Index w_dim() const { return 2 * N + p + r; }
    BlockDiagOp d_of(const Theta& theta) const;

    // Dense GCM with explicit complement columns; test-sized only.
    GcmSpec to_gcm_spec(Eigen::Index cap = 400) const;
};

PosteriorGcm assemble_posterior(const GlmmSpec& glmm);

}  // namespace epr
