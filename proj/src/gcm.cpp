#include "epr/gcm.hpp"

#include <cmath>
#include <sstream>

namespace epr {

BlockDiagOp::Block BlockDiagOp::scaled_block(Eigen::Index n, double s) {
    if (s == 0.0 || !std::isfinite(s)) throw InvalidParams("scaled block requires nonzero finite scale");
    return {Block::Form::ScaledIdentity, n, s, {}, {}};
}

BlockDiagOp::Block BlockDiagOp::diagonal_block(Eigen::VectorXd d) {
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] == 0.0 || !std::isfinite(d[i]))
            throw InvalidParams("diagonal block requires nonzero finite entries");
    Block b;
    b.form = Block::Form::Diagonal;
    b.n = d.size();
    b.diag = std::move(d);
    return b;
}

BlockDiagOp::Block BlockDiagOp::lower_triangular_block(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("triangular block must be square");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (m(i, i) == 0.0 || !std::isfinite(m(i, i)))
            throw SingularError("triangular block has a zero or non-finite diagonal entry");
    Block b;
    b.form = Block::Form::LowerTriangular;
    b.n = m.rows();
    b.mat = std::move(m);
    return b;
}

BlockDiagOp::Block BlockDiagOp::dense_block(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("dense block must be square");
    Block b;
    b.form = Block::Form::Dense;
    b.n = m.rows();
    b.mat = std::move(m);
    return b;
}

void BlockDiagOp::add(Block b) {
    dim_ += b.n;
    blocks_.push_back(std::move(b));
}

Eigen::VectorXd BlockDiagOp::apply(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw DimensionMismatch("BlockDiagOp::apply dimension mismatch");
    Eigen::VectorXd out(dim_);
    Eigen::Index at = 0;
    for (const auto& b : blocks_) {
        const auto seg = x.segment(at, b.n);
        switch (b.form) {
            case Block::Form::ScaledIdentity: out.segment(at, b.n) = b.scale * seg; break;
            case Block::Form::Diagonal: out.segment(at, b.n) = b.diag.cwiseProduct(seg); break;
            case Block::Form::LowerTriangular:
            case Block::Form::Dense: out.segment(at, b.n) = b.mat * seg; break;
        }
        at += b.n;
    }
    return out;
}

Eigen::VectorXd BlockDiagOp::solve(const Eigen::VectorXd& y) const {
    if (y.size() != dim_) throw DimensionMismatch("BlockDiagOp::solve dimension mismatch");
    Eigen::VectorXd out(dim_);
    Eigen::Index at = 0;
    for (const auto& b : blocks_) {
        const auto seg = y.segment(at, b.n);
        switch (b.form) {
            case Block::Form::ScaledIdentity: out.segment(at, b.n) = seg / b.scale; break;
            case Block::Form::Diagonal: out.segment(at, b.n) = seg.cwiseQuotient(b.diag); break;
            case Block::Form::LowerTriangular:
                out.segment(at, b.n) =
                    b.mat.triangularView<Eigen::Lower>().solve(seg.eval());
                break;
            case Block::Form::Dense: {
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.mat);
                if (std::fabs(lu.determinant()) < 1e-300)
                    throw SingularError("dense D block is singular");
                out.segment(at, b.n) = lu.solve(seg.eval());
                break;
            }
        }
        at += b.n;
    }
    return out;
}

double BlockDiagOp::log_abs_det() const {
    double sum = 0.0;
    for (const auto& b : blocks_) {
        switch (b.form) {
            case Block::Form::ScaledIdentity:
                sum += b.n * std::log(std::fabs(b.scale));
                break;
            case Block::Form::Diagonal:
                sum += b.diag.array().abs().log().sum();
                break;
            case Block::Form::LowerTriangular:
                sum += b.mat.diagonal().array().abs().log().sum();
                break;
            case Block::Form::Dense: {
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(b.mat);
                const double det = lu.determinant();
                if (det == 0.0) throw SingularError("dense D block is singular");
                sum += std::log(std::fabs(det));
                break;
            }
        }
    }
    return sum;
}

Eigen::MatrixXd BlockDiagOp::to_dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_);
    Eigen::Index at = 0;
    for (const auto& b : blocks_) {
        switch (b.form) {
            case Block::Form::ScaledIdentity:
                out.block(at, at, b.n, b.n) = b.scale * Eigen::MatrixXd::Identity(b.n, b.n);
                break;
            case Block::Form::Diagonal:
                out.block(at, at, b.n, b.n) = b.diag.asDiagonal();
                break;
            case Block::Form::LowerTriangular:
            case Block::Form::Dense:
                out.block(at, at, b.n, b.n) = b.mat;
                break;
        }
        at += b.n;
    }
    return out;
}

namespace {

class IdentityV final : public VOperator {
public:
    explicit IdentityV(Eigen::Index n) : n_(n) {}
    Eigen::Index dim() const override { return n_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return x; }
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const override { return y; }
    double log_abs_det() const override { return 0.0; }
    Eigen::MatrixXd inverse_dense() const override { return Eigen::MatrixXd::Identity(n_, n_); }

private:
    Eigen::Index n_;
};

class DenseV final : public VOperator {
public:
    explicit DenseV(const Eigen::MatrixXd& v) : v_(v), lu_(v) {
        if (v.rows() != v.cols()) throw DimensionMismatch("V must be square");
        const double det = lu_.determinant();
        if (det == 0.0 || !std::isfinite(det)) throw SingularError("V is singular");
        log_abs_det_ = std::log(std::fabs(det));
    }
    Eigen::Index dim() const override { return v_.rows(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return v_ * x; }
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const override { return lu_.solve(y); }
    double log_abs_det() const override { return log_abs_det_; }
    Eigen::MatrixXd inverse_dense() const override {
        return lu_.solve(Eigen::MatrixXd::Identity(v_.rows(), v_.cols()));
    }

private:
    Eigen::MatrixXd v_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    double log_abs_det_ = 0.0;
};

}  // namespace

std::shared_ptr<const VOperator> identity_v(Eigen::Index n) {
    return std::make_shared<IdentityV>(n);
}

std::shared_ptr<const VOperator> dense_v(const Eigen::MatrixXd& v) {
    return std::make_shared<DenseV>(v);
}

void GcmSpec::validate() const {
    const Eigen::Index n = alpha.size();
    if (kappa.size() != n || mu.size() != n || static_cast<Eigen::Index>(psi.size()) != n)
        throw DimensionMismatch("alpha, kappa, mu and psi must share one length");
    if (!v) throw InvalidParams("missing V operator");
    if (v->dim() != n) throw DimensionMismatch("V dimension mismatch");
    if (!d_builder) throw InvalidParams("missing D builder");
    if (!theta_prior) throw InvalidParams("missing theta prior");
    for (Eigen::Index i = 0; i < n; ++i) coord_params(i).validate();
}

GcmSpec GcmSpec::plain(Eigen::VectorXd alpha, Eigen::VectorXd kappa, Eigen::VectorXd mu,
                       std::vector<DyFamily> psi, std::shared_ptr<const VOperator> v) {
    GcmSpec spec;
    const Eigen::Index n = alpha.size();
    spec.alpha = std::move(alpha);
    spec.kappa = std::move(kappa);
    spec.mu = std::move(mu);
    spec.psi = std::move(psi);
    spec.v = std::move(v);
    spec.d_builder = [n](const Theta&) {
        BlockDiagOp d;
        d.add(BlockDiagOp::identity_block(n));
        return d;
    };
    spec.theta_prior = [](RngStream&) { return Theta{}; };
    return spec;
}

std::pair<Theta, Eigen::VectorXd> gcm_sample(const GcmSpec& spec, RngStream& rng) {
    Theta theta = spec.theta_prior(rng);
    const BlockDiagOp d = spec.d_builder(theta);
    if (d.dim() != spec.dim()) throw DimensionMismatch("D(theta) dimension mismatch");
    Eigen::VectorXd w(spec.dim());
    for (Eigen::Index i = 0; i < spec.dim(); ++i) w[i] = dy_sample(spec.coord_params(i), rng);
    Eigen::VectorXd y = spec.mu + spec.v->apply(d.apply(w));
    return {std::move(theta), std::move(y)};
}

double gcm_log_density_given_theta(const GcmSpec& spec, const Eigen::VectorXd& y,
                                   const Theta& theta) {
    if (y.size() != spec.dim()) throw DimensionMismatch("y dimension mismatch");
    const BlockDiagOp d = spec.d_builder(theta);
    if (d.dim() != spec.dim()) throw DimensionMismatch("D(theta) dimension mismatch");
    const Eigen::VectorXd u = d.solve(spec.v->solve(y - spec.mu));
    double log_f = -d.log_abs_det() - spec.v->log_abs_det();
    for (Eigen::Index i = 0; i < spec.dim(); ++i)
        log_f += dy_log_density(spec.coord_params(i), u[i]);
    return log_f;
}

std::pair<Theta, Eigen::VectorXd> truncated_gcm_sample(const GcmSpec& spec,
                                                       const TruncationRegion& region,
                                                       long long max_tries, RngStream& rng) {
    if (max_tries <= 0) throw InvalidParams("max_tries must be positive");
    for (long long t = 0; t < max_tries; ++t) {
        auto draw = gcm_sample(spec, rng);
        if (region.predicate(draw.second)) return draw;
    }
    std::ostringstream msg;
    msg << "truncated GCM sampler exhausted " << max_tries << " tries";
    if (!region.description.empty()) msg << " for region " << region.description;
    msg << "; widen the region or raise max_tries";
    throw ExhaustedError(msg.str(), max_tries);
}

double cgcm_log_density_given_theta(const GcmSpec& spec, const Eigen::VectorXd& y1,
                                    const Eigen::VectorXd& y2, const Theta& theta) {
    const Eigen::Index n = spec.dim();
    const Eigen::Index r = y1.size();
    if (r + y2.size() != n) throw DimensionMismatch("y1/y2 partition must cover the full vector");
    const BlockDiagOp d = spec.d_builder(theta);
    const Eigen::MatrixXd v_inv = spec.v->inverse_dense();
    const auto h = v_inv.leftCols(r);
    const auto q = v_inv.rightCols(n - r);
    // mu* = D^{-1} V^{-1} mu - D^{-1} Q y2
    const Eigen::VectorXd mu_star = d.solve(v_inv * spec.mu - q * y2);
    const Eigen::VectorXd hy = d.solve(h * y1);
    const Eigen::VectorXd u = hy - mu_star;
    double val = spec.alpha.dot(hy) - spec.alpha.dot(mu_star);
    for (Eigen::Index i = 0; i < n; ++i) val -= spec.kappa[i] * psi(spec.psi[i], u[i]);
    return val;
}

}  // namespace epr
