#include "epr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace epr::io {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw IoError(where + ": cannot parse number '" + s + "'");
    return value;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

}  // namespace

void write_data_csv(const std::string& path, const GlmmSpec& glmm) {
    glmm.validate();
    const Eigen::Index p = glmm.p();
    const Eigen::Index r = glmm.g_identity ? 0 : glmm.r();
    std::ofstream out = open_out(path);
    out << "kind,z,aux";
    for (Eigen::Index j = 0; j < p; ++j) out << ",x." << (j + 1);
    for (Eigen::Index j = 0; j < r; ++j) out << ",g." << (j + 1);
    out << "\n";
    for (const auto& b : glmm.blocks) {
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            out << response_kind_name(b.kind) << "," << fmt(b.z[i]) << ",";
            if (b.kind == ResponseKind::StudentT)
                out << fmt(b.nu);
            else if (b.aux.size() == b.rows())
                out << fmt(b.aux[i]);
            for (Eigen::Index j = 0; j < p; ++j) out << "," << fmt(b.X(i, j));
            for (Eigen::Index j = 0; j < r; ++j) out << "," << fmt(b.G(i, j));
            out << "\n";
        }
    }
}

std::vector<DataBlock> read_data_csv(const std::string& path, Eigen::Index& p, Eigen::Index& r) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty data file");
    const std::vector<std::string> header = split(line, ',');
    if (header.size() < 3 || header[0] != "kind" || header[1] != "z" || header[2] != "aux")
        throw IoError(path + ": header must start with kind,z,aux");
    p = 0;
    r = 0;
    for (std::size_t j = 3; j < header.size(); ++j) {
        if (header[j].rfind("x.", 0) == 0)
            ++p;
        else if (header[j].rfind("g.", 0) == 0)
            ++r;
        else
            throw IoError(path + ": unexpected column '" + header[j] + "'");
    }

    struct RawRow {
        double z;
        bool has_aux;
        double aux;
        Eigen::VectorXd x, g;
    };
    std::map<ResponseKind, std::vector<RawRow>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << header.size() << " cells, found "
                << cells.size();
            throw IoError(msg.str());
        }
        const std::string where = path + ":" + std::to_string(line_no);
        RawRow row;
        const ResponseKind kind = response_kind_from_name(cells[0]);
        row.z = parse_double(cells[1], where);
        row.has_aux = !cells[2].empty();
        row.aux = row.has_aux ? parse_double(cells[2], where) : 0.0;
        row.x.resize(p);
        row.g.resize(r);
        for (Eigen::Index j = 0; j < p; ++j) row.x[j] = parse_double(cells[3 + j], where);
        for (Eigen::Index j = 0; j < r; ++j) row.g[j] = parse_double(cells[3 + p + j], where);
        rows[kind].push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no data rows");

    std::vector<DataBlock> blocks;
    for (ResponseKind kind : {ResponseKind::Gaussian, ResponseKind::Poisson,
                              ResponseKind::Binomial, ResponseKind::StudentT}) {
        auto it = rows.find(kind);
        if (it == rows.end()) continue;
        const auto& raw = it->second;
        DataBlock b;
        b.kind = kind;
        const Eigen::Index n = static_cast<Eigen::Index>(raw.size());
        b.z.resize(n);
        b.X.resize(n, p);
        b.G.resize(n, r);
        const bool wants_aux = kind != ResponseKind::Poisson;
        if (kind == ResponseKind::Gaussian || kind == ResponseKind::Binomial) b.aux.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            b.z[i] = raw[i].z;
            b.X.row(i) = raw[i].x.transpose();
            b.G.row(i) = raw[i].g.transpose();
            if (wants_aux && !raw[i].has_aux)
                throw IoError(path + ": missing aux value in a " +
                              std::string(response_kind_name(kind)) + " row");
            if (kind == ResponseKind::StudentT) {
                if (i == 0)
                    b.nu = raw[i].aux;
                else if (raw[i].aux != b.nu)
                    throw IoError(path + ": student_t rows must share one nu");
            } else if (wants_aux) {
                b.aux[i] = raw[i].aux;
            }
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto cells = split(t, ',');
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            try {
                row.push_back(parse_double(c, path + ":" + std::to_string(line_no)));
            } catch (const IoError&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (line_no == 1) continue;  // header row
            throw IoError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
        }
        if (!rows.empty() && rows.front().size() != row.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(path + ": no numeric rows");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
    std::ofstream out = open_out(path);
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            out << (j ? "," : "") << header[j];
        out << "\n";
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt(m(i, j));
        out << "\n";
    }
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in = open_in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin) {
    ConfigMap out;
    out.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << origin << ":" << line_no << ": expected key = value";
            throw ConfigError(msg.str());
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream msg;
            msg << origin << ":" << line_no << ": empty key";
            throw ConfigError(msg.str());
        }
        if (out.entries_.count(key)) {
            std::ostringstream msg;
            msg << origin << ":" << line_no << ": duplicate key '" << key << "'";
            throw ConfigError(msg.str());
        }
        out.entries_[key] = Entry{value, line_no, false};
    }
    return out;
}

void ConfigMap::fail(const std::string& key, const std::string& why) const {
    std::ostringstream msg;
    msg << origin_;
    const auto it = entries_.find(key);
    if (it != entries_.end()) msg << ":" << it->second.line;
    msg << ": key '" << key << "': " << why;
    throw ConfigError(msg.str());
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
}

std::string ConfigMap::require_string(const std::string& key) {
    if (!has(key)) fail(key, "required key is missing");
    return get_string(key, "");
}

double ConfigMap::get_double(const std::string& key, double fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    try {
        return parse_double(it->second.value, origin_);
    } catch (const IoError&) {
        fail(key, "expected a number, found '" + it->second.value + "'");
    }
}

long long ConfigMap::get_int(const std::string& key, long long fallback) {
    const double v = get_double(key, static_cast<double>(fallback));
    const long long out = static_cast<long long>(v);
    if (static_cast<double>(out) != v) fail(key, "expected an integer");
    return out;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    it->second.used = true;
    if (it->second.value == "true" || it->second.value == "1") return true;
    if (it->second.value == "false" || it->second.value == "0") return false;
    fail(key, "expected true or false");
}

void ConfigMap::reject_unknown_keys() const {
    for (const auto& [key, entry] : entries_) {
        if (!entry.used) {
            std::ostringstream msg;
            msg << origin_ << ":" << entry.line << ": unknown key '" << key << "'";
            throw ConfigError(msg.str());
        }
    }
}

AcceptanceSetting parse_acceptance(const std::string& text) {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string head = trim(text.substr(0, colon));
        const std::string tail = trim(text.substr(colon + 1));
        if (head == "rate") return AcceptanceSetting::rate(parse_double(tail, "acceptance"));
        if (head == "omega") return AcceptanceSetting::omega(parse_double(tail, "acceptance"));
    }
    throw ConfigError("acceptance must be rate:<p> or omega:<value|inf>, found '" + text + "'");
}

namespace {

DyFamily parse_family(ConfigMap& cfg, const std::string& section) {
    const std::string name = cfg.get_string(section + ".family", "gaussian");
    if (name == "gaussian") return DyFamily::gaussian();
    if (name == "log_gamma") return DyFamily::log_gamma();
    if (name == "logit_beta") return DyFamily::logit_beta();
    if (name == "student_t") return DyFamily::student_t(cfg.get_double(section + ".nu", 3.0));
    throw ConfigError(cfg.origin() + ": " + section + ".family: unknown family '" + name + "'");
}

PriorSpec parse_prior(ConfigMap& cfg, const std::string& section) {
    PriorSpec prior;
    prior.family = parse_family(cfg, section);
    prior.alpha = cfg.get_double(section + ".alpha", 0.0);
    prior.kappa = cfg.get_double(section + ".kappa",
                                 prior.family.kind == DyKind::StudentT ? 2.0 : 0.5);
    return prior;
}

}  // namespace

ModelConfig load_model_config(const std::string& path) {
    ConfigMap cfg = ConfigMap::parse_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& rel) {
        const std::filesystem::path p(rel);
        return p.is_absolute() ? p.string() : (base / p).string();
    };

    ModelConfig out;
    const std::string data_path = resolve(cfg.require_string("data"));
    Eigen::Index p = 0, r = 0;
    out.glmm.blocks = read_data_csv(data_path, p, r);

    const std::string g_mode = cfg.get_string("g", r > 0 ? "columns" : "none");
    if (g_mode == "identity") {
        if (r > 0)
            throw ConfigError(cfg.origin() + ": g = identity conflicts with g.* data columns");
        out.glmm.g_identity = true;
    } else if (g_mode != "columns" && g_mode != "none") {
        throw ConfigError(cfg.origin() + ": g must be identity, columns or none");
    }

    out.glmm.beta_prior = parse_prior(cfg, "beta");
    out.glmm.eta_prior = parse_prior(cfg, "eta");
    out.glmm.xi_alpha = cfg.get_double("xi.alpha", 0.1);
    out.glmm.xi_sigma2 = cfg.get_double("xi.sigma2", 1.0);

    const Eigen::Index r_eff = out.glmm.g_identity ? out.glmm.total_n() : r;

    // D_beta: fixed scale by default, optional iid inverse-gamma variances
    if (cfg.has("beta.scale_prior")) {
        const std::string spec = cfg.get_string("beta.scale_prior", "");
        if (spec.rfind("ig:", 0) != 0)
            throw ConfigError(cfg.origin() + ": beta.scale_prior must be ig:<shape>,<rate>");
        const auto parts = split(spec.substr(3), ',');
        if (parts.size() != 2)
            throw ConfigError(cfg.origin() + ": beta.scale_prior must be ig:<shape>,<rate>");
        out.glmm.d_beta = iid_ig_sd_builder(out.glmm.theta_prior, "sigma2_beta", p,
                                            parse_double(parts[0], "beta.scale_prior"),
                                            parse_double(parts[1], "beta.scale_prior"));
    } else if (p > 0) {
        out.glmm.d_beta = fixed_scale_builder(p, cfg.get_double("beta.scale", 1.0));
    }

    // D_eta: fixed scale, shared inverse-gamma variance, or the
    // coregionalized CAR factor over an adjacency file
    const std::string eta_spec = cfg.get_string("eta.scale_prior", "");
    if (eta_spec == "mcar") {
        McarOptions opts;
        opts.ig_shape = cfg.get_double("mcar.ig_shape", 3.0);
        opts.ig_rate = cfg.get_double("mcar.ig_rate", 2.0);
        opts.gamma_df = cfg.get_double("mcar.gamma_df", 3.0);
        if (cfg.has("mcar.rho")) opts.rho_fixed = cfg.get_double("mcar.rho", 0.0);
        if (cfg.has("mcar.sigma1_sq")) opts.sigma1_fixed = cfg.get_double("mcar.sigma1_sq", 1.0);
        if (cfg.has("mcar.sigma2_sq")) opts.sigma2_fixed = cfg.get_double("mcar.sigma2_sq", 1.0);
        if (cfg.has("mcar.gamma")) opts.gamma_fixed = cfg.get_double("mcar.gamma", 0.0);
        const Eigen::MatrixXd adjacency =
            read_matrix_csv(resolve(cfg.require_string("mcar.adjacency")));
        if (2 * adjacency.rows() != r_eff)
            throw ConfigError(cfg.origin() +
                              ": mcar adjacency must cover half the random-effect dimension");
        out.glmm.d_eta = mcar_builder(out.glmm.theta_prior, "eta", adjacency, opts);
    } else if (!eta_spec.empty()) {
        if (eta_spec.rfind("ig:", 0) != 0)
            throw ConfigError(cfg.origin() + ": eta.scale_prior must be ig:<shape>,<rate> or mcar");
        const auto parts = split(eta_spec.substr(3), ',');
        if (parts.size() != 2)
            throw ConfigError(cfg.origin() + ": eta.scale_prior must be ig:<shape>,<rate>");
        out.glmm.d_eta = scalar_ig_sd_builder(out.glmm.theta_prior, "sigma2_eta", r_eff,
                                              parse_double(parts[0], "eta.scale_prior"),
                                              parse_double(parts[1], "eta.scale_prior"));
    } else if (r_eff > 0) {
        out.glmm.d_eta = fixed_scale_builder(r_eff, cfg.get_double("eta.scale", 1.0));
    }

    out.run.draws = cfg.get_int("sampler.draws", 100);
    out.run.seed = static_cast<std::uint64_t>(cfg.get_int("sampler.seed", 0));
    long long default_workers = 1;
    if (const char* env = std::getenv("EPR_WORKERS"))
        default_workers = std::max(1LL, std::atoll(env));
    out.run.workers = static_cast<int>(cfg.get_int("sampler.workers", default_workers));
    if (cfg.has("sampler.acceptance"))
        out.run.acceptance = parse_acceptance(cfg.get_string("sampler.acceptance", ""));

    out.output.draws_path = resolve(cfg.get_string("output.draws", "draws.csv"));
    out.output.summary_path = resolve(cfg.get_string("output.summary", "summary.csv"));
    out.output.meta_path = resolve(cfg.get_string("output.meta", "run_meta.txt"));
    out.output.emit_latent = cfg.get_bool("output.emit_latent", false);
    out.output.latent_path = resolve(cfg.get_string("output.latent", "latent.csv"));

    cfg.reject_unknown_keys();
    out.glmm.validate();
    out.run.validate();
    return out;
}

void write_draws_csv(const std::string& path, const DrawSet& set) {
    std::ofstream out = open_out(path);
    out << "draw,g";
    for (const auto& name : set.theta_names) out << ",theta." << name;
    for (Eigen::Index j = 0; j < set.p; ++j) out << ",beta." << (j + 1);
    for (Eigen::Index j = 0; j < set.r; ++j) out << ",eta." << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < set.draws.size(); ++i) {
        const Draw& d = set.draws[i];
        out << (i + 1) << "," << fmt(d.g);
        for (Eigen::Index j = 0; j < d.theta.values.size(); ++j)
            out << "," << fmt(d.theta.values[j]);
        for (Eigen::Index j = 0; j < set.p; ++j) out << "," << fmt(d.beta[j]);
        for (Eigen::Index j = 0; j < set.r; ++j) out << "," << fmt(d.eta[j]);
        out << "\n";
    }
}

void write_latent_csv(const std::string& path, const DrawSet& set, long long max_cells) {
    const long long cells =
        static_cast<long long>(set.draws.size()) * 4LL * static_cast<long long>(set.n);
    if (cells > max_cells) {
        std::ostringstream msg;
        msg << "latent emission of " << cells << " values exceeds the guard of " << max_cells;
        throw ConfigError(msg.str());
    }
    std::ofstream out = open_out(path);
    out << "draw";
    const char* groups[4] = {"xi", "y", "y_hat", "y_tilde"};
    for (const char* g : groups)
        for (Eigen::Index j = 0; j < set.n; ++j) out << "," << g << "." << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < set.draws.size(); ++i) {
        const Draw& d = set.draws[i];
        out << (i + 1);
        for (const Eigen::VectorXd* v : {&d.xi, &d.y_rep, &d.y_hat, &d.y_tilde})
            for (Eigen::Index j = 0; j < set.n; ++j) out << "," << fmt((*v)[j]);
        out << "\n";
    }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows,
                       const std::vector<double>& probs) {
    std::ofstream out = open_out(path);
    out << "target,coord,mean,sd";
    for (double p : probs) out << ",q" << p;
    out << "\n";
    for (const auto& row : rows) {
        out << row.target << "," << (row.coord + 1) << "," << fmt(row.mean) << "," << fmt(row.sd);
        for (double q : row.quantiles) out << "," << fmt(q);
        out << "\n";
    }
}

void write_run_meta(const std::string& path, const DrawSet& set, double wall_seconds) {
    std::ofstream out = open_out(path);
    out << "seed = " << set.config.seed << "\n";
    out << "draws = " << set.draws.size() << "\n";
    out << "proposals_made = " << set.proposals_made << "\n";
    out << "omega_used = " << fmt(set.omega_used) << "\n";
    if (set.config.acceptance.mode == AcceptanceSetting::Mode::Rate)
        out << "omega_note = percentile estimate from " << set.proposals_made
            << " proposals; its sampling variability is not corrected for\n";
    out << "workers = " << set.config.workers << "\n";
    out << "wall_seconds = " << fmt(wall_seconds) << "\n";
}

}  // namespace epr::io
