#pragma once

#include <Eigen/Dense>

#include "epr/errors.hpp"

namespace epr {

// Precomputed factor set for the saturated design
//
//         ( I_N  X  G )
//     H = (  0   I  0 )
//         (  0   0  I )
//         ( I_N  0  0 )
//
// enabling zeta = (H'H)^{-1} H' w without forming anything N x N. All
// inverses are r x r or p x p and are computed once at build time:
//   L^{-1}   with L = G'G + I_r
//   W^{-1}   with W = L - (1/2) G'G
//   F2       = X'X + I_p - X'G L^{-1} G'X
//   F22      = (F2 - B12' F1^{-1} B12)^{-1},  B12 = (I - G L^{-1} G') X
// and F1^{-1} is applied as (1/2) I + (1/4) G W^{-1} G'.
//
// G may be declared identity (r == N), which skips every product with G.
// Immutable after build; apply() is pure and safe to call concurrently.
class ProjectionOperator {
public:
    ProjectionOperator() = default;  // empty; assign from build() before use

    static ProjectionOperator build(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G);
    static ProjectionOperator build_with_identity_g(const Eigen::MatrixXd& X);

    Eigen::Index n() const { return n_; }
    Eigen::Index p() const { return p_; }
    Eigen::Index r() const { return r_; }
    Eigen::Index w_dim() const { return 2 * n_ + p_ + r_; }
    Eigen::Index zeta_dim() const { return n_ + p_ + r_; }
    bool identity_g() const { return g_identity_; }

    const Eigen::MatrixXd& x() const { return X_; }
    const Eigen::MatrixXd& f2() const { return F2_; }
    const Eigen::MatrixXd& f22() const { return F22_; }
    const Eigen::MatrixXd& l_inv() const { return L_inv_; }

    // zeta = (H'H)^{-1} H' w for w = (w_e, w_beta, w_eta, w_xi).
    Eigen::VectorXd apply(const Eigen::VectorXd& w) const;

    Eigen::VectorXd x_times(const Eigen::VectorXd& beta) const;
    Eigen::VectorXd g_times(const Eigen::VectorXd& eta) const;
    // X beta + G eta + xi
    Eigen::VectorXd fitted(const Eigen::VectorXd& xi, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& eta) const;

    // Dense (N+p+r)^2 inverse assembled from the nested 2x2 block identities.
    Eigen::MatrixXd dense_hth_inverse(Eigen::Index cap = 2000) const;

    // Explicit H, and the orthonormal complement Q with H'Q = 0. Test-sized
    // paths only; guarded by cap on 2N+p+r.
    Eigen::MatrixXd materialize_h(Eigen::Index cap = 4000) const;
    Eigen::MatrixXd materialize_q_complement(Eigen::Index cap = 4000) const;

private:
    Eigen::VectorXd f1_inv_apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gt_times(const Eigen::VectorXd& v) const;  // G' v

    Eigen::Index n_ = 0, p_ = 0, r_ = 0;
    bool g_identity_ = false;
    Eigen::MatrixXd X_;       // N x p
    Eigen::MatrixXd G_;       // N x r (empty when identity)
    Eigen::MatrixXd L_inv_;   // r x r
    Eigen::MatrixXd W_inv_;   // r x r
    Eigen::MatrixXd GX_;      // r x p = G'X
    Eigen::MatrixXd F2_;      // p x p
    Eigen::MatrixXd F22_;     // p x p
};

// Squared residual g = ||y_rep - yhat_rep||^2 where y_rep is the first N
// entries of w and yhat_rep = X beta + G eta + xi from zeta = op.apply(w).
double residual_g(const ProjectionOperator& op, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& zeta);

// (H'H)^{-1} assembled directly from X and G via the outer 2x2 identity with
// A = 2 I_N; the inner (p+r) block is inverted through its own starred 2x2
// split. Guarded by cap on N+p+r.
Eigen::MatrixXd dense_block_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G,
                                    Eigen::Index cap = 2000);

}  // namespace epr
