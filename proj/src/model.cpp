#include "epr/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <queue>
#include <sstream>

namespace epr {

namespace {

bool is_nonneg_integer(double v) {
    return v >= 0.0 && std::fabs(v - std::round(v)) < 1e-9;
}

void check_adjacency(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw InvalidParams("adjacency must be a nonempty square matrix");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0.0) throw InvalidParams("adjacency must have a zero diagonal");
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) != a(j, i)) throw InvalidParams("adjacency must be symmetric");
            if (a(i, j) != 0.0 && a(i, j) != 1.0) throw InvalidParams("adjacency must be binary");
        }
    }
}

bool connected(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    std::vector<bool> seen(n, false);
    std::queue<Eigen::Index> todo;
    todo.push(0);
    seen[0] = true;
    Eigen::Index count = 1;
    while (!todo.empty()) {
        const Eigen::Index i = todo.front();
        todo.pop();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (a(i, j) != 0.0 && !seen[j]) {
                seen[j] = true;
                ++count;
                todo.push(j);
            }
        }
    }
    return count == n;
}

int kind_order(ResponseKind k) { return static_cast<int>(k); }

}  // namespace

const char* response_kind_name(ResponseKind kind) {
    switch (kind) {
        case ResponseKind::Gaussian: return "gaussian";
        case ResponseKind::Poisson: return "poisson";
        case ResponseKind::Binomial: return "binomial";
        case ResponseKind::StudentT: return "student_t";
    }
    return "?";
}

ResponseKind response_kind_from_name(const std::string& name) {
    if (name == "gaussian") return ResponseKind::Gaussian;
    if (name == "poisson") return ResponseKind::Poisson;
    if (name == "binomial") return ResponseKind::Binomial;
    if (name == "student_t") return ResponseKind::StudentT;
    throw InvalidParams("unknown response kind: " + name);
}

DyFamily response_family(ResponseKind kind, double nu) {
    switch (kind) {
        case ResponseKind::Gaussian: return DyFamily::gaussian();
        case ResponseKind::Poisson: return DyFamily::log_gamma();
        case ResponseKind::Binomial: return DyFamily::logit_beta();
        case ResponseKind::StudentT: return DyFamily::student_t(nu);
    }
    return DyFamily::gaussian();
}

void DataBlock::validate(Eigen::Index p, Eigen::Index r, bool g_identity) const {
    const Eigen::Index n = rows();
    if (n == 0) throw InvalidParams("data block is empty");
    if (X.rows() != n || X.cols() != p) throw DimensionMismatch("X rows/cols mismatch in block");
    if (!g_identity && r > 0 && (G.rows() != n || G.cols() != r))
        throw DimensionMismatch("G rows/cols mismatch in block");
    switch (kind) {
        case ResponseKind::Gaussian:
            if (!variances_known())
                throw InvalidParams(
                    "gaussian block lacks known variances; provide them or marginalize to "
                    "student_t");
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(aux[i] > 0.0)) throw InvalidParams("gaussian variances must be positive");
            break;
        case ResponseKind::Poisson:
            for (Eigen::Index i = 0; i < n; ++i)
                if (!is_nonneg_integer(z[i]))
                    throw InvalidParams("poisson data must be nonnegative integers");
            break;
        case ResponseKind::Binomial:
            if (aux.size() != n) throw InvalidParams("binomial block needs trial counts");
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!is_nonneg_integer(aux[i]) || aux[i] < 1.0)
                    throw InvalidParams("binomial trial counts must be positive integers");
                if (!is_nonneg_integer(z[i]) || z[i] > aux[i])
                    throw InvalidParams("binomial data must satisfy 0 <= z <= m");
            }
            break;
        case ResponseKind::StudentT:
            if (!(nu > 0.0)) throw InvalidParams("student_t block requires nu > 0");
            break;
    }
}

DataBlock marginalize_gaussian_variance(const DataBlock& block, double nu) {
    if (block.kind != ResponseKind::Gaussian)
        throw InvalidParams("variance marginalization applies to gaussian blocks");
    if (block.variances_known())
        throw InvalidParams("block already carries known variances");
    if (!(nu > 0.0)) throw InvalidParams("marginalization requires nu > 0");
    DataBlock out = block;
    out.kind = ResponseKind::StudentT;
    out.aux.resize(0);
    out.nu = nu;
    return out;
}

double ThetaComponent::sample(RngStream& rng) const {
    switch (kind) {
        case Kind::InverseGamma: return rng.inverse_gamma(shape, rate);
        case Kind::UniformRho: return rng.uniform(lo, hi);
        case Kind::StudentT: return rng.student_t(df);
        case Kind::PointMass: return value;
    }
    return 0.0;
}

int ThetaPrior::add(ThetaComponent c) {
    components.push_back(std::move(c));
    return static_cast<int>(components.size()) - 1;
}

Theta ThetaPrior::sample(RngStream& rng) const {
    Theta t;
    t.values.resize(size());
    for (Eigen::Index i = 0; i < size(); ++i) t.values[i] = components[i].sample(rng);
    return t;
}

std::vector<std::string> ThetaPrior::names() const {
    std::vector<std::string> out;
    out.reserve(components.size());
    for (const auto& c : components) out.push_back(c.name);
    return out;
}

DBlockBuilder fixed_scale_builder(Eigen::Index n, double scale) {
    if (!(scale > 0.0)) throw InvalidParams("fixed scale must be positive");
    return [n, scale](const Theta&) { return BlockDiagOp::scaled_block(n, scale); };
}

DBlockBuilder fixed_diag_builder(Eigen::VectorXd diag) {
    return [d = std::move(diag)](const Theta&) { return BlockDiagOp::diagonal_block(d); };
}

DBlockBuilder iid_ig_sd_builder(ThetaPrior& prior, const std::string& base_name, Eigen::Index n,
                                double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw InvalidParams("IG shape and rate must be positive");
    const int begin = static_cast<int>(prior.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        ThetaComponent c;
        c.kind = ThetaComponent::Kind::InverseGamma;
        c.name = base_name + "." + std::to_string(i + 1);
        c.shape = shape;
        c.rate = rate;
        prior.add(std::move(c));
    }
    return [begin, n](const Theta& t) {
        return BlockDiagOp::diagonal_block(t.values.segment(begin, n).cwiseSqrt());
    };
}

DBlockBuilder scalar_ig_sd_builder(ThetaPrior& prior, const std::string& name, Eigen::Index n,
                                   double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw InvalidParams("IG shape and rate must be positive");
    ThetaComponent c;
    c.kind = ThetaComponent::Kind::InverseGamma;
    c.name = name;
    c.shape = shape;
    c.rate = rate;
    const int idx = prior.add(std::move(c));
    return [idx, n](const Theta& t) {
        return BlockDiagOp::scaled_block(n, std::sqrt(t.values[idx]));
    };
}

Eigen::MatrixXd car_precision(const Eigen::MatrixXd& adjacency, double rho) {
    check_adjacency(adjacency);
    const Eigen::Index n = adjacency.rows();
    Eigen::MatrixXd prec = -rho * adjacency;
    for (Eigen::Index i = 0; i < n; ++i) prec(i, i) = adjacency.row(i).sum();
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
        throw SingularError("CAR precision is not positive definite; rho outside its bounds");
    return prec;
}

std::pair<double, double> rho_bounds(const Eigen::MatrixXd& adjacency) {
    check_adjacency(adjacency);
    const Eigen::Index n = adjacency.rows();
    Eigen::VectorXd deg = adjacency.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i)
        if (deg[i] <= 0.0)
            throw SingularError("adjacency has an isolated node; degree matrix is singular");
    if (!connected(adjacency))
        std::cerr << "[epr] warning: adjacency graph is disconnected\n";
    const Eigen::VectorXd dis = deg.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd norm = dis.asDiagonal() * adjacency * dis.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(norm);
    if (es.info() != Eigen::Success) throw NumericError("eigen decomposition failed");
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo < 0.0) || !(hi > 0.0))
        throw NumericError("normalized adjacency spectrum has unexpected signs");
    return {1.0 / lo, 1.0 / hi};
}

Eigen::MatrixXd mcar_covariance_chol(double sigma1_sq, double sigma2_sq, double gamma, double rho,
                                     const Eigen::MatrixXd& adjacency) {
    if (!(sigma1_sq > 0.0) || !(sigma2_sq > 0.0))
        throw InvalidParams("mcar variances must be positive");
    const Eigen::Index n = adjacency.rows();
    const Eigen::MatrixXd prec = car_precision(adjacency, rho);
    Eigen::MatrixXd cov_base =
        sigma1_sq * prec.llt().solve(Eigen::MatrixXd::Identity(n, n));
    cov_base = 0.5 * (cov_base + cov_base.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(cov_base);
    if (llt.info() != Eigen::Success) {
        // one jitter retry before giving up
        const double jitter = 1e-10 * cov_base.diagonal().mean();
        cov_base.diagonal().array() += jitter;
        llt.compute(cov_base);
        if (llt.info() != Eigen::Success)
            throw SingularError("cholesky failure on the CAR covariance block");
    }
    const Eigen::MatrixXd l1 = llt.matrixL();

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = l1;
    out.bottomLeftCorner(n, n) = gamma * l1;
    out.bottomRightCorner(n, n) =
        std::sqrt(sigma2_sq) * Eigen::MatrixXd::Identity(n, n);
    return out;
}

DBlockBuilder mcar_builder(ThetaPrior& prior, const std::string& base_name,
                           const Eigen::MatrixXd& adjacency, const McarOptions& opts) {
    check_adjacency(adjacency);
    const auto [rho_lo, rho_hi] = rho_bounds(adjacency);

    auto add_fixed = [&prior](const std::string& name, double v) {
        ThetaComponent c;
        c.kind = ThetaComponent::Kind::PointMass;
        c.name = name;
        c.value = v;
        return prior.add(std::move(c));
    };
    auto add_ig = [&prior, &opts](const std::string& name) {
        ThetaComponent c;
        c.kind = ThetaComponent::Kind::InverseGamma;
        c.name = name;
        c.shape = opts.ig_shape;
        c.rate = opts.ig_rate;
        return prior.add(std::move(c));
    };

    int rho_idx;
    if (opts.rho_fixed) {
        if (!(*opts.rho_fixed > rho_lo) || !(*opts.rho_fixed < rho_hi))
            throw InvalidParams("fixed rho lies outside the positive-definite range");
        rho_idx = add_fixed(base_name + ".rho", *opts.rho_fixed);
    } else {
        ThetaComponent c;
        c.kind = ThetaComponent::Kind::UniformRho;
        c.name = base_name + ".rho";
        c.lo = rho_lo;
        c.hi = rho_hi;
        rho_idx = prior.add(std::move(c));
    }
    const int s1_idx = opts.sigma1_fixed ? add_fixed(base_name + ".sigma1_sq", *opts.sigma1_fixed)
                                         : add_ig(base_name + ".sigma1_sq");
    const int s2_idx = opts.sigma2_fixed ? add_fixed(base_name + ".sigma2_sq", *opts.sigma2_fixed)
                                         : add_ig(base_name + ".sigma2_sq");
    int gamma_idx;
    if (opts.gamma_fixed) {
        gamma_idx = add_fixed(base_name + ".gamma", *opts.gamma_fixed);
    } else {
        ThetaComponent c;
        c.kind = ThetaComponent::Kind::StudentT;
        c.name = base_name + ".gamma";
        c.df = opts.gamma_df;
        gamma_idx = prior.add(std::move(c));
    }

    Eigen::MatrixXd adj = adjacency;
    return [adj, rho_idx, s1_idx, s2_idx, gamma_idx](const Theta& t) {
        return BlockDiagOp::lower_triangular_block(mcar_covariance_chol(
            t.values[s1_idx], t.values[s2_idx], t.values[gamma_idx], t.values[rho_idx], adj));
    };
}

Eigen::Index GlmmSpec::total_n() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    return n;
}

Eigen::Index GlmmSpec::p() const { return blocks.empty() ? 0 : blocks.front().X.cols(); }

Eigen::Index GlmmSpec::r() const {
    if (g_identity) return total_n();
    return blocks.empty() ? 0 : blocks.front().G.cols();
}

void GlmmSpec::validate() const {
    if (blocks.empty()) throw InvalidParams("empty model: no data blocks");
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        if (kind_order(blocks[i].kind) <= kind_order(blocks[i - 1].kind))
            throw InvalidParams(
                "blocks must be ordered gaussian, poisson, binomial, student_t with at most one "
                "block per kind");
    }
    const Eigen::Index pp = p();
    const Eigen::Index rr = r();
    for (const auto& b : blocks) b.validate(pp, rr, g_identity);
    beta_prior.validate();
    eta_prior.validate();
    if (!(xi_sigma2 > 0.0)) throw InvalidParams("xi variance must be positive");
    if (xi_alpha < 0.0) throw InvalidParams("xi alpha must be nonnegative");
    if (xi_alpha == 0.0) {
        for (const auto& b : blocks) {
            if ((b.kind == ResponseKind::Poisson || b.kind == ResponseKind::Binomial) &&
                b.z.minCoeff() == 0.0)
                throw InvalidParams(
                    "boundary violation: zero counts require xi alpha > 0");
        }
    }
    if (q_prior.kind == QPriorKind::Truncated) {
        if (!q_prior.omega && !q_prior.accept_rate)
            throw InvalidParams("truncated q prior needs omega or an acceptance rate");
        if (q_prior.accept_rate && !(*q_prior.accept_rate > 0.0 && *q_prior.accept_rate <= 1.0))
            throw InvalidParams("acceptance rate must lie in (0, 1]");
        if (q_prior.omega && !(*q_prior.omega >= 0.0))
            throw InvalidParams("omega must be nonnegative");
    }
}

RealizedTheta sample_theta(const GlmmSpec& glmm, RngStream& rng) {
    RealizedTheta out;
    out.theta = glmm.theta_prior.sample(rng);
    const Eigen::Index pp = glmm.p();
    const Eigen::Index rr = glmm.r();
    out.d_beta = glmm.d_beta ? glmm.d_beta(out.theta)
                             : BlockDiagOp::identity_block(pp);
    out.d_eta = glmm.d_eta ? glmm.d_eta(out.theta) : BlockDiagOp::identity_block(rr);
    if (out.d_beta.n != pp) throw DimensionMismatch("D_beta block has the wrong size");
    if (out.d_eta.n != rr) throw DimensionMismatch("D_eta block has the wrong size");
    return out;
}

BlockDiagOp PosteriorGcm::d_of(const Theta& theta) const {
    BlockDiagOp d;
    d.add(BlockDiagOp::identity_block(N));
    if (p > 0) d.add(d_beta ? d_beta(theta) : BlockDiagOp::identity_block(p));
    if (r > 0) d.add(d_eta ? d_eta(theta) : BlockDiagOp::identity_block(r));
    d.add(BlockDiagOp::scaled_block(N, sigma_xi));
    if (d.dim() != w_dim()) throw DimensionMismatch("D(theta) has the wrong dimension");
    return d;
}

GcmSpec PosteriorGcm::to_gcm_spec(Eigen::Index cap) const {
    const Eigen::MatrixXd h = op.materialize_h(cap);
    const Eigen::MatrixXd q = op.materialize_q_complement(cap);
    const Eigen::Index m = w_dim();
    Eigen::MatrixXd v(m, m);
    v.topRows(op.zeta_dim()) = op.dense_hth_inverse(cap) * h.transpose();
    v.bottomRows(m - op.zeta_dim()) = q.transpose();

    GcmSpec spec;
    spec.alpha = alpha_M;
    spec.kappa = kappa_M;
    spec.psi = psi_M;
    spec.mu = v * w_shift;
    spec.v = dense_v(v);
    spec.d_builder = [self = *this](const Theta& t) { return self.d_of(t); };
    spec.theta_prior = [prior = theta_prior](RngStream& rng) { return prior.sample(rng); };
    spec.validate();
    return spec;
}

PosteriorGcm assemble_posterior(const GlmmSpec& glmm) {
    glmm.validate();
    const Eigen::Index n = glmm.total_n();
    const Eigen::Index pp = glmm.p();
    const Eigen::Index rr = glmm.r();

    Eigen::MatrixXd x_all(n, pp);
    Eigen::MatrixXd g_all(n, glmm.g_identity ? 0 : rr);
    Eigen::Index at = 0;
    for (const auto& b : glmm.blocks) {
        x_all.middleRows(at, b.rows()) = b.X;
        if (!glmm.g_identity && rr > 0) g_all.middleRows(at, b.rows()) = b.G;
        at += b.rows();
    }

    PosteriorGcm post;
    post.N = n;
    post.p = pp;
    post.r = rr;
    post.op = glmm.g_identity ? ProjectionOperator::build_with_identity_g(x_all)
                              : ProjectionOperator::build(x_all, g_all);
    post.theta_prior = glmm.theta_prior;
    post.d_beta = glmm.d_beta ? glmm.d_beta : fixed_scale_builder(std::max<Eigen::Index>(pp, 1), 1.0);
    post.d_eta = glmm.d_eta ? glmm.d_eta : fixed_scale_builder(std::max<Eigen::Index>(rr, 1), 1.0);
    post.sigma_xi = std::sqrt(glmm.xi_sigma2);
    post.q_prior = glmm.q_prior;

    const Eigen::Index m = 2 * n + pp + rr;
    post.alpha_M.setZero(m);
    post.kappa_M.setZero(m);
    post.w_shift.setZero(m);
    post.psi_M.assign(m, DyFamily::gaussian());

    at = 0;
    for (const auto& b : glmm.blocks) {
        post.block_layout.emplace_back(b.kind, b.rows());
        for (Eigen::Index i = 0; i < b.rows(); ++i, ++at) {
            switch (b.kind) {
                case ResponseKind::Gaussian:
                    post.alpha_M[at] = b.z[i] / b.aux[i];
                    post.kappa_M[at] = 0.5 / b.aux[i];
                    post.psi_M[at] = DyFamily::gaussian();
                    break;
                case ResponseKind::Poisson:
                    post.alpha_M[at] = b.z[i] + glmm.xi_alpha;
                    post.kappa_M[at] = 1.0;
                    post.psi_M[at] = DyFamily::log_gamma();
                    break;
                case ResponseKind::Binomial:
                    post.alpha_M[at] = b.z[i] + glmm.xi_alpha;
                    post.kappa_M[at] = b.aux[i] + 2.0 * glmm.xi_alpha;
                    post.psi_M[at] = DyFamily::logit_beta();
                    break;
                case ResponseKind::StudentT:
                    post.alpha_M[at] = 0.0;
                    post.kappa_M[at] = 0.5 * (b.nu + 1.0);
                    post.psi_M[at] = DyFamily::student_t(b.nu);
                    post.w_shift[at] = b.z[i];
                    break;
            }
        }
    }
    for (Eigen::Index j = 0; j < pp; ++j, ++at) {
        post.alpha_M[at] = glmm.beta_prior.alpha;
        post.kappa_M[at] = glmm.beta_prior.kappa;
        post.psi_M[at] = glmm.beta_prior.family;
    }
    for (Eigen::Index j = 0; j < rr; ++j, ++at) {
        post.alpha_M[at] = glmm.eta_prior.alpha;
        post.kappa_M[at] = glmm.eta_prior.kappa;
        post.psi_M[at] = glmm.eta_prior.family;
    }
    for (Eigen::Index j = 0; j < n; ++j, ++at) {
        post.alpha_M[at] = 0.0;
        post.kappa_M[at] = 0.5;
        post.psi_M[at] = DyFamily::gaussian();
    }

    for (Eigen::Index i = 0; i < m; ++i)
        DyParams{post.psi_M[i], post.alpha_M[i], post.kappa_M[i]}.validate();
    return post;
}

}  // namespace epr
