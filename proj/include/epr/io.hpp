#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "epr/experiments.hpp"
#include "epr/sampler.hpp"

namespace epr::io {

// One CSV per model: header kind,z,aux,x.1..x.p,g.1..g.r. aux holds the
// gaussian variance, the binomial trial count or the student-t degrees of
// freedom; blank for poisson. Rows are re-packed into the canonical kind
// order on read.
void write_data_csv(const std::string& path, const GlmmSpec& glmm);
std::vector<DataBlock> read_data_csv(const std::string& path, Eigen::Index& p, Eigen::Index& r);

Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

// Flat key = value configuration with dotted sections and '#' comments.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    std::string require_string(const std::string& key);
    double get_double(const std::string& key, double fallback);
    long long get_int(const std::string& key, long long fallback);
    bool get_bool(const std::string& key, bool fallback);

    // Fails on keys that were never read, pointing at their line.
    void reject_unknown_keys() const;
    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;
    std::map<std::string, Entry> entries_;
    std::string origin_;
};

struct OutputConfig {
    std::string draws_path = "draws.csv";
    std::string summary_path = "summary.csv";
    std::string meta_path = "run_meta.txt";
    bool emit_latent = false;
    std::string latent_path = "latent.csv";
};

struct ModelConfig {
    GlmmSpec glmm;
    EprConfig run;
    OutputConfig output;
};

// Parses the config, loads the data file (paths resolve relative to the
// config's directory) and builds a validated model. Errors carry the
// offending key and line.
ModelConfig load_model_config(const std::string& path);

// Acceptance flag syntax shared by the config and the CLI:
// "rate:0.5", "omega:1.5", "omega:inf".
AcceptanceSetting parse_acceptance(const std::string& text);

void write_draws_csv(const std::string& path, const DrawSet& set);
// Wide per-draw latent state (xi and the three predictors); refuses to
// write beyond `max_cells` values.
void write_latent_csv(const std::string& path, const DrawSet& set, long long max_cells = 50000000);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows,
                       const std::vector<double>& probs);
void write_run_meta(const std::string& path, const DrawSet& set, double wall_seconds);

}  // namespace epr::io
