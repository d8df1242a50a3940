#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "epr/io.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct FitFlags {
    std::optional<std::uint64_t> seed;
    std::optional<long long> draws;
    std::optional<int> workers;
    std::string acceptance;
    bool emit_latent = false;
};

int run_fit(const std::string& config_path, const std::vector<std::string>& overrides,
            const FitFlags& flags) {
    epr::io::ModelConfig config = epr::io::load_model_config(config_path);
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw epr::ConfigError("override must be key=value: " + ov);
        const std::string key = ov.substr(0, eq);
        const std::string value = ov.substr(eq + 1);
        if (key == "seed")
            config.run.seed = std::stoull(value);
        else if (key == "draws")
            config.run.draws = std::stoll(value);
        else if (key == "workers")
            config.run.workers = std::stoi(value);
        else if (key == "acceptance")
            config.run.acceptance = epr::io::parse_acceptance(value);
        else
            throw epr::ConfigError("unknown override key: " + key);
    }
    if (flags.seed) config.run.seed = *flags.seed;
    if (flags.draws) config.run.draws = *flags.draws;
    if (flags.workers) config.run.workers = *flags.workers;
    if (!flags.acceptance.empty())
        config.run.acceptance = epr::io::parse_acceptance(flags.acceptance);
    if (flags.emit_latent) config.output.emit_latent = true;

    const auto start = Clock::now();
    const epr::DrawSet set = epr::epr_run(config.glmm, config.run);
    const double wall = seconds_since(start);

    epr::io::write_draws_csv(config.output.draws_path, set);
    const std::vector<double> probs{0.05, 0.5, 0.95};
    std::vector<std::string> targets{"beta"};
    if (set.r > 0) targets.push_back("eta");
    targets.insert(targets.end(), {"y_tilde", "y_hat", "y"});
    epr::io::write_summary_csv(config.output.summary_path, epr::summarize(set, targets, probs),
                               probs);
    epr::io::write_run_meta(config.output.meta_path, set, wall);
    if (config.output.emit_latent) epr::io::write_latent_csv(config.output.latent_path, set);

    std::cout << "accepted " << set.draws.size() << " draws from " << set.proposals_made
              << " proposals (omega_used = " << set.omega_used << ", " << wall << " s)\n";
    return 0;
}

void write_config_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw epr::IoError("cannot open for writing: " + path);
    out << body;
}

int run_simulate(const std::string& study, const std::string& out_dir, long long n,
                 long long basis, long long r, long long areas, std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto in_dir = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

    if (study == "study1") {
        epr::Study1Design design;
        design.n_per_block = n;
        design.basis_count = basis;
        auto [glmm, truth] = epr::gen_study1(design, seed);
        epr::io::write_data_csv(in_dir("data.csv"), glmm);
        epr::io::write_matrix_csv(in_dir("truth_y.csv"), truth.y_true, {"y_true"});
        epr::io::write_matrix_csv(in_dir("truth_beta.csv"), truth.beta_true, {"beta_true"});
        epr::io::write_matrix_csv(in_dir("truth_eta.csv"), truth.eta_true, {"eta_true"});
        write_config_file(in_dir("config.epr"),
                          "data = data.csv\n"
                          "beta.family = student_t\nbeta.nu = 3\nbeta.kappa = 2\n"
                          "beta.scale = 2\n"
                          "eta.family = student_t\neta.nu = 3\neta.kappa = 2\n"
                          "eta.scale = 2\n"
                          "xi.alpha = 1.0\n"
                          "sampler.draws = 100\nsampler.acceptance = rate:0.5\n"
                          "sampler.seed = " + std::to_string(seed) + "\n");
    } else if (study == "study2-poisson" || study == "study2-bernoulli") {
        const bool poisson = study == "study2-poisson";
        auto [glmm, mean_true] = poisson ? epr::gen_study2_poisson(n, r, seed)
                                         : epr::gen_study2_bernoulli(n, r, seed);
        epr::io::write_data_csv(in_dir("data.csv"), glmm);
        epr::io::write_matrix_csv(in_dir("truth_mean.csv"), mean_true, {"mean_true"});
        write_config_file(in_dir("config.epr"),
                          "data = data.csv\n" +
                          std::string(poisson ? "xi.alpha = 1.0\n" : "xi.alpha = 0.25\n") +
                          "sampler.draws = 600\nsampler.acceptance = rate:0.5\n"
                          "sampler.seed = " + std::to_string(seed) + "\n");
    } else if (study == "car") {
        const epr::CarStudyData data = epr::gen_car_study(areas, seed);
        epr::io::write_data_csv(in_dir("data.csv"), data.glmm);
        epr::io::write_matrix_csv(in_dir("adjacency.csv"), data.adjacency);
        epr::io::write_matrix_csv(in_dir("truth_y.csv"), data.y_true, {"y_true"});
        write_config_file(in_dir("config.epr"),
                          "data = data.csv\n"
                          "g = identity\n"
                          "beta.family = student_t\nbeta.nu = 3\nbeta.kappa = 2\n"
                          "beta.scale_prior = ig:1.5,0.5\n"
                          "eta.scale_prior = mcar\nmcar.adjacency = adjacency.csv\n"
                          "xi.alpha = 0.1\n"
                          "sampler.draws = 100\nsampler.acceptance = rate:0.5\n"
                          "sampler.seed = " + std::to_string(seed) + "\n");
    } else {
        throw epr::ConfigError("unknown study '" + study +
                               "' (study1, study2-poisson, study2-bernoulli, car)");
    }
    std::cout << "wrote " << study << " dataset to " << out_dir << "\n";
    return 0;
}

int run_study(const std::string& table, const std::string& out_path, long long replicates,
              long long n, long long basis, long long r, long long areas, long long draws,
              std::uint64_t seed, int workers) {
    if (replicates < 1) throw epr::ConfigError("replicates must be at least 1");
    std::ofstream out(out_path);
    if (!out) throw epr::IoError("cannot open for writing: " + out_path);
    out.precision(6);

    if (table == "table1") {
        const std::vector<double> rates{1.0, 0.5, 0.25};
        out << "acceptance,k,rmspe_y_tilde,rmspe_y_hat,rmspe_y,rmse_beta,coverage_beta,"
               "coverage_y,cpu_seconds\n";
        for (double rate : rates) {
            Eigen::MatrixXd rmspe_sum = Eigen::MatrixXd::Zero(3, 3);
            double rmse_sum = 0.0, cover_beta = 0.0, cover_y = 0.0, cpu = 0.0;
            for (long long rep = 0; rep < replicates; ++rep) {
                epr::Study1Design design;
                design.n_per_block = n;
                design.basis_count = basis;
                auto [glmm, truth] = epr::gen_study1(design, seed + 1000 * rep);
                epr::EprConfig config;
                config.draws = draws;
                config.seed = seed + 1000 * rep + 1;
                config.workers = workers;
                config.acceptance = epr::AcceptanceSetting::rate(rate);
                const auto start = Clock::now();
                const epr::DrawSet set = epr::epr_run(glmm, config);
                cpu += seconds_since(start);
                const epr::MetricReport report = epr::metrics_study1(set, truth);
                rmspe_sum += report.rmspe;
                rmse_sum += report.rmse_beta;
                cover_beta += report.coverage_beta;
                cover_y += report.coverage_y;
            }
            const double inv = 1.0 / static_cast<double>(replicates);
            for (int k = 0; k < 3; ++k) {
                out << rate << "," << (k + 1) << "," << rmspe_sum(k, 0) * inv << ","
                    << rmspe_sum(k, 1) * inv << "," << rmspe_sum(k, 2) * inv << ","
                    << rmse_sum * inv << "," << cover_beta * inv << "," << cover_y * inv << ","
                    << cpu * inv << "\n";
            }
        }
    } else if (table == "table2") {
        out << "regression,avg_mse,mse_lo,mse_hi,avg_cpu,cpu_lo,cpu_hi\n";
        for (const bool poisson : {false, true}) {
            std::vector<double> mses, cpus;
            for (long long rep = 0; rep < replicates; ++rep) {
                auto [glmm, mean_true] = poisson
                                             ? epr::gen_study2_poisson(n, r, seed + 77 * rep)
                                             : epr::gen_study2_bernoulli(n, r, seed + 77 * rep);
                epr::EprConfig config;
                config.draws = draws;
                config.seed = seed + 77 * rep + 13;
                config.workers = workers;
                config.acceptance = epr::AcceptanceSetting::rate(0.5);
                const auto start = Clock::now();
                const epr::DrawSet set = epr::epr_run(glmm, config);
                cpus.push_back(seconds_since(start));
                mses.push_back(epr::metrics_study2(
                    set, mean_true,
                    poisson ? epr::ResponseKind::Poisson : epr::ResponseKind::Binomial));
            }
            auto mean_sd = [](const std::vector<double>& v) {
                double m = 0.0;
                for (double x : v) m += x;
                m /= static_cast<double>(v.size());
                double s = 0.0;
                for (double x : v) s += (x - m) * (x - m);
                s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
                return std::pair<double, double>{m, s};
            };
            const auto [mse_m, mse_s] = mean_sd(mses);
            const auto [cpu_m, cpu_s] = mean_sd(cpus);
            const double mse_half = 2.0 * mse_s / std::sqrt(static_cast<double>(mses.size()));
            const double cpu_half = 2.0 * cpu_s / std::sqrt(static_cast<double>(cpus.size()));
            out << (poisson ? "poisson" : "logistic") << "," << mse_m << ","
                << (mse_m - mse_half) << "," << (mse_m + mse_half) << "," << cpu_m << ","
                << (cpu_m - cpu_half) << "," << (cpu_m + cpu_half) << "\n";
        }
    } else if (table == "car") {
        out << "k,cv,corr,skipped\n";
        const epr::CarStudyData data = epr::gen_car_study(areas, seed);
        epr::EprConfig config;
        config.draws = draws;
        config.seed = seed + 1;
        config.workers = workers;
        for (int k = 0; k < 2; ++k) {
            const epr::LooResult res = epr::loo_cv(data.glmm, config, k);
            out << (k + 1) << "," << res.cv << "," << res.pearson << "," << res.skipped << "\n";
        }
    } else {
        throw epr::ConfigError("unknown table '" + table + "' (table1, table2, car)");
    }
    std::cout << "wrote " << table << " metrics to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact posterior sampling for multi-type Bayesian GLMMs"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "fit a model described by a config file");
    std::string config_path;
    std::vector<std::string> overrides;
    FitFlags fit_flags;
    std::uint64_t fit_seed = 0;
    long long fit_draws = 0;
    int fit_workers = 0;
    fit->add_option("--config", config_path, "model config file")->required();
    fit->add_option("--set", overrides,
                    "override a run key (seed=, draws=, workers=, acceptance=)");
    auto* seed_opt = fit->add_option("--seed", fit_seed, "override the sampler seed");
    auto* draws_opt = fit->add_option("--draws", fit_draws, "override the draw count");
    auto* workers_opt = fit->add_option("--workers", fit_workers, "override the worker count");
    fit->add_option("--acceptance", fit_flags.acceptance, "override rate:<p> or omega:<value>");
    fit->add_flag("--emit-latent", fit_flags.emit_latent,
                  "also write the wide per-draw latent file");

    auto* sim = app.add_subcommand("simulate", "generate a study dataset with truth files");
    std::string study_name, out_dir = ".";
    long long sim_n = 500, sim_basis = 20, sim_r = 1, sim_areas = 67;
    std::uint64_t sim_seed = 0;
    sim->add_option("--study", study_name, "study1 | study2-poisson | study2-bernoulli | car")
        ->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--n", sim_n, "observations per block");
    sim->add_option("--basis", sim_basis, "random-effect basis count (study1)");
    sim->add_option("--r", sim_r, "covariate count (study2)");
    sim->add_option("--areas", sim_areas, "area count (car)");
    sim->add_option("--seed", sim_seed, "generator seed");

    auto* study = app.add_subcommand("study", "run a replicated study and emit a metrics table");
    std::string table_name, metrics_path = "metrics.csv";
    long long replicates = 10, st_n = 500, st_basis = 20, st_r = 1, st_areas = 67, st_draws = 100;
    std::uint64_t st_seed = 0;
    int st_workers = 1;
    study->add_option("--table", table_name, "table1 | table2 | car")->required();
    study->add_option("--out", metrics_path, "metrics CSV path");
    study->add_option("--replicates", replicates, "independent data replicates");
    study->add_option("--n", st_n, "observations per block");
    study->add_option("--basis", st_basis, "random-effect basis count (table1)");
    study->add_option("--r", st_r, "covariate count (table2)");
    study->add_option("--areas", st_areas, "area count (car)");
    study->add_option("--draws", st_draws, "accepted draws per fit");
    study->add_option("--seed", st_seed, "base seed");
    study->add_option("--workers", st_workers, "proposal workers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*fit) {
            if (seed_opt->count()) fit_flags.seed = fit_seed;
            if (draws_opt->count()) fit_flags.draws = fit_draws;
            if (workers_opt->count()) fit_flags.workers = fit_workers;
            return run_fit(config_path, overrides, fit_flags);
        }
        if (*sim) return run_simulate(study_name, out_dir, sim_n, sim_basis, sim_r, sim_areas,
                                      sim_seed);
        return run_study(table_name, metrics_path, replicates, st_n, st_basis, st_r, st_areas,
                         st_draws, st_seed, st_workers);
    } catch (const epr::ExhaustedError& e) {
        std::cerr << "error: exhausted: " << e.what() << "\n";
        return 3;
    } catch (const epr::IoError& e) {
        std::cerr << "error: io-error: " << e.what() << "\n";
        return 2;
    } catch (const epr::ConfigError& e) {
        std::cerr << "error: config-error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid-params: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: numeric-error: " << e.what() << "\n";
        return 1;
    }
}
