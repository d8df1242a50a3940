#include "epr/projection.hpp"

#include <iostream>
#include <sstream>

namespace epr {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* label,
                            bool warn_condition = true) {
    if (m.rows() == 0) return m;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "singular block: " << label << " (" << m.rows() << "x" << m.cols() << ")";
        throw SingularError(msg.str());
    }
    if (warn_condition) {
        const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
        const double lo = d.minCoeff(), hi = d.maxCoeff();
        if (lo > 0.0 && (hi / lo) * (hi / lo) > 1e12)
            std::cerr << "[epr] warning: " << label << " condition number above 1e12\n";
    }
    return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

void check_cap(Eigen::Index value, Eigen::Index cap, const char* what) {
    if (value > cap) {
        std::ostringstream msg;
        msg << what << " requested at dimension " << value << " exceeds cap " << cap;
        throw InvalidParams(msg.str());
    }
}

}  // namespace

ProjectionOperator ProjectionOperator::build(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G) {
    if (X.rows() == 0) throw DimensionMismatch("projection requires N >= 1");
    if (G.size() > 0 && G.rows() != X.rows())
        throw DimensionMismatch("X and G row counts differ");

    ProjectionOperator op;
    op.n_ = X.rows();
    op.p_ = X.cols();
    op.r_ = G.cols();
    op.X_ = X;
    op.G_ = G;
    op.g_identity_ = false;

    if (op.r_ > 0) {
        const Eigen::MatrixXd GtG = G.transpose() * G;
        op.L_inv_ = spd_inverse(GtG + Eigen::MatrixXd::Identity(op.r_, op.r_), "L = G'G + I");
        op.W_inv_ = spd_inverse(Eigen::MatrixXd::Identity(op.r_, op.r_) + 0.5 * GtG,
                                "L - (1/2) G'G");
        op.GX_ = G.transpose() * X;
    }
    if (op.p_ > 0) {
        Eigen::MatrixXd F2 = X.transpose() * X + Eigen::MatrixXd::Identity(op.p_, op.p_);
        Eigen::MatrixXd B12 = X;  // (I - G L^{-1} G') X
        if (op.r_ > 0) {
            F2 -= op.GX_.transpose() * (op.L_inv_ * op.GX_);
            B12 -= G * (op.L_inv_ * op.GX_);
        }
        op.F2_ = F2;
        Eigen::MatrixXd f1inv_b12 = 0.5 * B12;
        if (op.r_ > 0) f1inv_b12 += 0.25 * G * (op.W_inv_ * (G.transpose() * B12));
        op.F22_ = spd_inverse(F2 - B12.transpose() * f1inv_b12, "F2 - B12' F1^{-1} B12");
    }
    return op;
}

ProjectionOperator ProjectionOperator::build_with_identity_g(const Eigen::MatrixXd& X) {
    if (X.rows() == 0) throw DimensionMismatch("projection requires N >= 1");
    ProjectionOperator op;
    op.n_ = X.rows();
    op.p_ = X.cols();
    op.r_ = op.n_;
    op.X_ = X;
    op.g_identity_ = true;
    if (op.p_ > 0) {
        const Eigen::MatrixXd XtX = X.transpose() * X;
        op.F2_ = 0.5 * XtX + Eigen::MatrixXd::Identity(op.p_, op.p_);
        op.F22_ = spd_inverse(XtX / 3.0 + Eigen::MatrixXd::Identity(op.p_, op.p_),
                              "F2 - B12' F1^{-1} B12");
    }
    return op;
}

Eigen::VectorXd ProjectionOperator::gt_times(const Eigen::VectorXd& v) const {
    if (g_identity_) return v;
    return G_.transpose() * v;
}

Eigen::VectorXd ProjectionOperator::g_times(const Eigen::VectorXd& eta) const {
    if (eta.size() != r_) throw DimensionMismatch("eta length mismatch");
    if (r_ == 0) return Eigen::VectorXd::Zero(n_);
    if (g_identity_) return eta;
    return G_ * eta;
}

Eigen::VectorXd ProjectionOperator::x_times(const Eigen::VectorXd& beta) const {
    if (beta.size() != p_) throw DimensionMismatch("beta length mismatch");
    if (p_ == 0) return Eigen::VectorXd::Zero(n_);
    return X_ * beta;
}

Eigen::VectorXd ProjectionOperator::fitted(const Eigen::VectorXd& xi, const Eigen::VectorXd& beta,
                                           const Eigen::VectorXd& eta) const {
    if (xi.size() != n_) throw DimensionMismatch("xi length mismatch");
    Eigen::VectorXd out = xi;
    if (p_ > 0) out += x_times(beta);
    if (r_ > 0) out += g_times(eta);
    return out;
}

Eigen::VectorXd ProjectionOperator::f1_inv_apply(const Eigen::VectorXd& x) const {
    if (r_ == 0) return 0.5 * x;
    if (g_identity_) return (2.0 / 3.0) * x;
    return 0.5 * x + 0.25 * (G_ * (W_inv_ * (G_.transpose() * x)));
}

Eigen::VectorXd ProjectionOperator::apply(const Eigen::VectorXd& w) const {
    if (w.size() != w_dim()) throw DimensionMismatch("w must have length 2N+p+r");
    const auto w_e = w.head(n_);
    const auto w_beta = w.segment(n_, p_);
    const auto w_eta = w.segment(n_ + p_, r_);
    const auto w_xi = w.tail(n_);

    const Eigen::VectorXd r1 = w_e + w_xi;
    Eigen::VectorXd r2;
    if (p_ > 0) r2 = X_.transpose() * w_e + w_beta;

    Eigen::VectorXd zeta(zeta_dim());
    if (r_ == 0) {
        const Eigen::VectorXd v = 0.5 * r1;
        if (p_ == 0) {
            zeta = v;
            return zeta;
        }
        const Eigen::VectorXd beta = F22_ * (r2 - X_.transpose() * v);
        zeta.head(n_) = v - 0.5 * (X_ * beta);
        zeta.tail(p_) = beta;
        return zeta;
    }

    const Eigen::VectorXd pvec = gt_times(w_e) + w_eta;
    Eigen::VectorXd lp;  // L^{-1} P
    if (g_identity_)
        lp = 0.5 * pvec;
    else
        lp = L_inv_ * pvec;
    const Eigen::VectorXd glp = g_times(lp);

    const Eigen::VectorXd u1 = r1 - glp;
    const Eigen::VectorXd v = f1_inv_apply(u1);

    Eigen::VectorXd xi, beta, s;
    if (p_ > 0) {
        const Eigen::VectorXd u2 = r2 - X_.transpose() * glp;
        // B12' v = X' (I - G L^{-1} G') v
        Eigen::VectorXd t1;
        if (g_identity_)
            t1 = 0.5 * v;
        else
            t1 = v - G_ * (L_inv_ * (G_.transpose() * v));
        beta = F22_ * (u2 - X_.transpose() * t1);
        s = X_ * beta;
        Eigen::VectorXd s2;
        if (g_identity_)
            s2 = 0.5 * s;
        else
            s2 = s - G_ * (L_inv_ * (GX_ * beta));
        xi = v - f1_inv_apply(s2);
    } else {
        beta.resize(0);
        s = Eigen::VectorXd::Zero(n_);
        xi = v;
    }

    Eigen::VectorXd eta;
    if (g_identity_)
        eta = 0.5 * (pvec - xi - s);
    else
        eta = L_inv_ * (pvec - gt_times(xi) - (p_ > 0 ? (GX_ * beta).eval()
                                                      : Eigen::VectorXd::Zero(r_).eval()));

    zeta.head(n_) = xi;
    zeta.segment(n_, p_) = beta;
    zeta.tail(r_) = eta;
    return zeta;
}

Eigen::MatrixXd ProjectionOperator::dense_hth_inverse(Eigen::Index cap) const {
    check_cap(zeta_dim(), cap, "dense (H'H)^{-1}");
    Eigen::MatrixXd G = g_identity_ ? Eigen::MatrixXd::Identity(n_, n_) : G_;
    return dense_block_inverse(X_, G, cap);
}

Eigen::MatrixXd ProjectionOperator::materialize_h(Eigen::Index cap) const {
    check_cap(w_dim(), cap, "explicit H");
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(w_dim(), zeta_dim());
    H.topLeftCorner(n_, n_).setIdentity();
    if (p_ > 0) H.block(0, n_, n_, p_) = X_;
    if (r_ > 0)
        H.block(0, n_ + p_, n_, r_) =
            g_identity_ ? Eigen::MatrixXd::Identity(n_, n_) : G_;
    if (p_ > 0) H.block(n_, n_, p_, p_).setIdentity();
    if (r_ > 0) H.block(n_ + p_, n_ + p_, r_, r_).setIdentity();
    H.block(n_ + p_ + r_, 0, n_, n_).setIdentity();
    return H;
}

Eigen::MatrixXd ProjectionOperator::materialize_q_complement(Eigen::Index cap) const {
    const Eigen::MatrixXd H = materialize_h(cap);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(H);
    Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(w_dim(), w_dim());
    return q_full.rightCols(w_dim() - zeta_dim());
}

double residual_g(const ProjectionOperator& op, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& zeta) {
    if (w.size() != op.w_dim() || zeta.size() != op.zeta_dim())
        throw DimensionMismatch("residual_g dimension mismatch");
    const Eigen::Index n = op.n(), p = op.p(), r = op.r();
    const Eigen::VectorXd yhat =
        op.fitted(zeta.head(n), zeta.segment(n, p), zeta.tail(r));
    return (w.head(n) - yhat).squaredNorm();
}

Eigen::MatrixXd dense_block_inverse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G,
                                    Eigen::Index cap) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Index r = G.cols();
    if (G.size() > 0 && G.rows() != n) throw DimensionMismatch("X and G row counts differ");
    check_cap(n + p + r, cap, "dense (H'H)^{-1}");

    // Inner (p+r) x (p+r) Schur complement D - B' A^{-1} B in its starred form.
    const Eigen::MatrixXd a_star =
        0.5 * X.transpose() * X + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd a_star_inv = spd_inverse(a_star, "A* = (1/2) X'X + I", false);
    const Eigen::MatrixXd b_star = 0.5 * X.transpose() * G;  // p x r
    const Eigen::MatrixXd d_star =
        0.5 * G.transpose() * G + Eigen::MatrixXd::Identity(r, r);
    const Eigen::MatrixXd s2 = d_star - b_star.transpose() * (a_star_inv * b_star);
    const Eigen::MatrixXd s2_inv = spd_inverse(s2, "D* - C* A*^{-1} B*", false);

    Eigen::MatrixXd s_inv(p + r, p + r);
    const Eigen::MatrixXd ab = a_star_inv * b_star;  // p x r
    s_inv.topLeftCorner(p, p) = a_star_inv + ab * s2_inv * ab.transpose();
    s_inv.topRightCorner(p, r) = -ab * s2_inv;
    s_inv.bottomLeftCorner(r, p) = s_inv.topRightCorner(p, r).transpose();
    s_inv.bottomRightCorner(r, r) = s2_inv;
    s_inv = 0.5 * (s_inv + s_inv.transpose()).eval();

    Eigen::MatrixXd b(n, p + r);
    if (p > 0) b.leftCols(p) = X;
    if (r > 0) b.rightCols(r) = G;

    Eigen::MatrixXd out(n + p + r, n + p + r);
    const Eigen::MatrixXd bs = b * s_inv;  // n x (p+r)
    Eigen::MatrixXd top_left = 0.25 * bs * b.transpose();
    top_left.diagonal().array() += 0.5;
    out.topLeftCorner(n, n) = 0.5 * (top_left + top_left.transpose()).eval();
    out.topRightCorner(n, p + r) = -0.5 * bs;
    out.bottomLeftCorner(p + r, n) = out.topRightCorner(n, p + r).transpose();
    out.bottomRightCorner(p + r, p + r) = s_inv;
    return out;
}

}  // namespace epr
