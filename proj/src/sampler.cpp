#include "epr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace epr {

namespace {

constexpr double kAcceptanceFloor = 1e-6;
constexpr long long kFloorCheckAfter = 1000000;

void parallel_for(long long begin, long long end, int workers,
                  const std::function<void(long long)>& fn) {
    const long long count = end - begin;
    if (count <= 0) return;
    if (workers <= 1 || count == 1) {
        for (long long i = begin; i < end; ++i) fn(i);
        return;
    }
    const int used = static_cast<int>(std::min<long long>(workers, count));
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < used; ++t) {
        threads.emplace_back([&, t]() {
            const long long chunk = (count + used - 1) / used;
            const long long lo = begin + t * chunk;
            const long long hi = std::min(end, lo + chunk);
            try {
                for (long long i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct Proposal {
    Theta theta;
    Eigen::VectorXd w;
    Eigen::VectorXd zeta;
    double g = 0.0;
};

Proposal propose(const PosteriorGcm& post, std::uint64_t seed, long long index) {
    RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(index));
    Proposal prop;
    auto [theta, w] = simulate_w(post, rng);
    prop.theta = std::move(theta);
    prop.w = std::move(w);
    prop.zeta = post.op.apply(prop.w);
    prop.g = residual_g(post.op, prop.w, prop.zeta);
    if (!std::isfinite(prop.g)) throw NumericError("non-finite residual statistic in a proposal");
    return prop;
}

Draw to_draw(const PosteriorGcm& post, Proposal&& prop, long long index) {
    Draw d;
    const Eigen::Index n = post.N, p = post.p, r = post.r;
    d.theta = std::move(prop.theta);
    d.xi = prop.zeta.head(n);
    d.beta = prop.zeta.segment(n, p);
    d.eta = prop.zeta.tail(r);
    d.y_rep = prop.w.head(n);
    d.y_tilde = post.op.x_times(d.beta) + post.op.g_times(d.eta);
    d.y_hat = d.y_tilde + d.xi;
    d.g = prop.g;
    d.proposal_index = index;
    return d;
}

AcceptanceSetting resolve_acceptance(const PosteriorGcm& post, const EprConfig& config) {
    if (post.q_prior.kind == QPriorKind::PointMassZero)
        throw InvalidParams(
            "q is fixed at zero: the posterior is a conditional distribution without a direct "
            "sampler; evaluate its density instead");
    AcceptanceSetting eff = config.acceptance;
    if (eff.mode == AcceptanceSetting::Mode::Default) {
        if (post.q_prior.kind == QPriorKind::Truncated) {
            if (post.q_prior.accept_rate) return AcceptanceSetting::rate(*post.q_prior.accept_rate);
            return AcceptanceSetting::omega(*post.q_prior.omega);
        }
        return AcceptanceSetting::omega(std::numeric_limits<double>::infinity());
    }
    return eff;
}

DrawSet run_omega(const PosteriorGcm& post, const EprConfig& config, double omega) {
    DrawSet out;
    out.config = config;
    out.omega_used = omega;
    out.theta_names = post.theta_prior.names();
    out.n = post.N;
    out.p = post.p;
    out.r = post.r;
    out.draws.reserve(config.draws);

    const long long block = std::max<long long>(256, 64LL * config.workers);
    long long next_index = 0;
    long long scanned = 0;
    std::vector<Proposal> buf(block);
    while (static_cast<long long>(out.draws.size()) < config.draws) {
        parallel_for(0, block, config.workers, [&](long long i) {
            buf[i] = propose(post, config.seed, next_index + i);
        });
        for (long long i = 0; i < block; ++i) {
            ++scanned;
            if (buf[i].g <= omega) {
                out.draws.push_back(to_draw(post, std::move(buf[i]), next_index + i));
                out.proposals_made = next_index + i + 1;
                if (static_cast<long long>(out.draws.size()) == config.draws) break;
            }
        }
        next_index += block;
        if (scanned >= kFloorCheckAfter &&
            static_cast<double>(out.draws.size()) < kAcceptanceFloor * scanned) {
            std::ostringstream msg;
            msg << "acceptance rate below " << kAcceptanceFloor << " after " << scanned
                << " proposals (omega = " << omega << "); raise omega";
            throw ExhaustedError(msg.str(), scanned);
        }
    }
    return out;
}

DrawSet run_rate(const PosteriorGcm& post, const EprConfig& config, double rate) {
    const long long n_prop =
        static_cast<long long>(std::ceil(static_cast<double>(config.draws) / rate));
    // First pass scores every proposal; accepted indices are regenerated in
    // full afterwards, so memory stays O(B) regardless of the rate.
    std::vector<double> g(n_prop);
    parallel_for(0, n_prop, config.workers,
                 [&](long long i) { g[i] = propose(post, config.seed, i).g; });

    std::vector<long long> order(n_prop);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](long long a, long long b) {
        if (g[a] != g[b]) return g[a] < g[b];
        return a < b;
    });
    std::vector<long long> accepted(order.begin(), order.begin() + config.draws);
    const double omega_hat = g[accepted.back()];
    std::sort(accepted.begin(), accepted.end());

    DrawSet out;
    out.config = config;
    out.omega_used = omega_hat;
    out.proposals_made = n_prop;
    out.theta_names = post.theta_prior.names();
    out.n = post.N;
    out.p = post.p;
    out.r = post.r;
    out.draws.resize(config.draws);
    parallel_for(0, config.draws, config.workers, [&](long long k) {
        out.draws[k] = to_draw(post, propose(post, config.seed, accepted[k]), accepted[k]);
    });
    return out;
}

}  // namespace

void EprConfig::validate() const {
    if (draws < 1) throw InvalidParams("draw count must be at least 1");
    if (workers < 1) throw InvalidParams("worker count must be at least 1");
    switch (acceptance.mode) {
        case AcceptanceSetting::Mode::Rate:
            if (!(acceptance.value > 0.0) || !(acceptance.value <= 1.0))
                throw InvalidParams("acceptance rate must lie in (0, 1]");
            break;
        case AcceptanceSetting::Mode::Omega:
            if (!(acceptance.value >= 0.0)) throw InvalidParams("omega must be nonnegative");
            break;
        case AcceptanceSetting::Mode::Default:
            break;
    }
}

std::pair<Theta, Eigen::VectorXd> simulate_w(const PosteriorGcm& post, RngStream& rng) {
    Theta theta = post.theta_prior.sample(rng);
    const BlockDiagOp d = post.d_of(theta);
    Eigen::VectorXd w_m(post.w_dim());
    for (Eigen::Index i = 0; i < post.w_dim(); ++i)
        w_m[i] = dy_sample({post.psi_M[i], post.alpha_M[i], post.kappa_M[i]}, rng);
    Eigen::VectorXd w = d.apply(w_m) + post.w_shift;
    return {std::move(theta), std::move(w)};
}

DrawSet epr_run(const PosteriorGcm& post, const EprConfig& config) {
    config.validate();
    const AcceptanceSetting eff = resolve_acceptance(post, config);
    if (eff.mode == AcceptanceSetting::Mode::Rate) return run_rate(post, config, eff.value);
    return run_omega(post, config, eff.value);
}

DrawSet epr_run(const GlmmSpec& glmm, const EprConfig& config) {
    return epr_run(assemble_posterior(glmm), config);
}

Eigen::MatrixXd draw_matrix(const DrawSet& set, const std::string& target) {
    if (set.draws.empty()) throw InvalidParams("empty draw set");
    const Eigen::Index b = static_cast<Eigen::Index>(set.draws.size());
    auto pick = [&](const Draw& d) -> const Eigen::VectorXd& {
        if (target == "y") return d.y_rep;
        if (target == "y_hat") return d.y_hat;
        if (target == "y_tilde") return d.y_tilde;
        if (target == "beta") return d.beta;
        if (target == "eta") return d.eta;
        if (target == "xi") return d.xi;
        throw InvalidParams("unknown draw target: " + target);
    };
    const Eigen::Index dim = pick(set.draws.front()).size();
    Eigen::MatrixXd out(b, dim);
    for (Eigen::Index i = 0; i < b; ++i) out.row(i) = pick(set.draws[i]).transpose();
    return out;
}

double sample_quantile(std::vector<double> x, double prob) {
    if (x.empty()) throw InvalidParams("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidParams("quantile prob outside [0,1]");
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * prob;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
}

std::vector<SummaryRow> summarize(const DrawSet& set, const std::vector<std::string>& targets,
                                  const std::vector<double>& probs) {
    if (set.draws.empty()) throw InvalidParams("empty draw set");
    std::vector<SummaryRow> rows;
    for (const auto& target : targets) {
        const Eigen::MatrixXd m = draw_matrix(set, target);
        const Eigen::Index b = m.rows();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            SummaryRow row;
            row.target = target;
            row.coord = j;
            row.mean = m.col(j).mean();
            row.sd = b > 1 ? std::sqrt((m.col(j).array() - row.mean).square().sum() /
                                       static_cast<double>(b - 1))
                           : 0.0;
            std::vector<double> col(m.col(j).data(), m.col(j).data() + b);
            for (double p : probs) row.quantiles.push_back(sample_quantile(col, p));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

bool JointRegion::contains(const Eigen::VectorXd& x) const {
    if (x.size() != center.size()) throw DimensionMismatch("joint region dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::fabs(x[i] - center[i]) > c * sd[i]) return false;
    return true;
}

JointRegion joint_credible_region(const Eigen::MatrixXd& draws, double level) {
    const Eigen::Index b = draws.rows();
    if (b < 50) throw InvalidParams("joint credible region needs at least 50 draws");
    if (!(level > 0.0 && level <= 1.0)) throw InvalidParams("level must lie in (0, 1]");
    JointRegion region;
    region.level = level;
    region.center = draws.colwise().mean();
    region.sd.resize(draws.cols());
    for (Eigen::Index j = 0; j < draws.cols(); ++j)
        region.sd[j] = std::sqrt((draws.col(j).array() - region.center[j]).square().sum() /
                                 static_cast<double>(b - 1));
    std::vector<double> score(b, 0.0);
    for (Eigen::Index i = 0; i < b; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < draws.cols(); ++j) {
            if (region.sd[j] == 0.0) continue;
            s = std::max(s, std::fabs(draws(i, j) - region.center[j]) / region.sd[j]);
        }
        score[i] = s;
    }
    std::sort(score.begin(), score.end());
    const Eigen::Index k = static_cast<Eigen::Index>(
        std::ceil(level * static_cast<double>(b))) - 1;
    region.c = score[std::min(std::max<Eigen::Index>(k, 0), b - 1)];
    return region;
}

}  // namespace epr
