#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "epr/io.hpp"

using namespace epr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "epr_io_test";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

GlmmSpec mixed_model() {
    GlmmSpec glmm;
    RngStream rng(101);
    auto mat = [&](Eigen::Index n, Eigen::Index m) {
        Eigen::MatrixXd out(n, m);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rng.normal();
        return out;
    };
    DataBlock gauss;
    gauss.kind = ResponseKind::Gaussian;
    gauss.z = (Eigen::VectorXd(2) << 0.5, -1.25).finished();
    gauss.aux = (Eigen::VectorXd(2) << 1.0, 2.5).finished();
    gauss.X = mat(2, 2);
    gauss.G = mat(2, 1);
    glmm.blocks.push_back(gauss);
    DataBlock pois;
    pois.kind = ResponseKind::Poisson;
    pois.z = (Eigen::VectorXd(2) << 3, 0).finished();
    pois.X = mat(2, 2);
    pois.G = mat(2, 1);
    glmm.blocks.push_back(pois);
    DataBlock st;
    st.kind = ResponseKind::StudentT;
    st.z = (Eigen::VectorXd(2) << 4.0, 5.5).finished();
    st.nu = 3.0;
    st.X = mat(2, 2);
    st.G = mat(2, 1);
    glmm.blocks.push_back(st);
    return glmm;
}

}  // namespace

TEST_CASE("data csv round trip preserves the model blocks") {
    const GlmmSpec glmm = mixed_model();
    const fs::path path = temp_dir() / "data.csv";
    io::write_data_csv(path.string(), glmm);
    Eigen::Index p = 0, r = 0;
    const std::vector<DataBlock> blocks = io::read_data_csv(path.string(), p, r);
    REQUIRE(blocks.size() == glmm.blocks.size());
    CHECK(p == 2);
    CHECK(r == 1);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        CHECK(blocks[k].kind == glmm.blocks[k].kind);
        CHECK((blocks[k].z - glmm.blocks[k].z).norm() == 0.0);
        CHECK((blocks[k].X - glmm.blocks[k].X).norm() == 0.0);
        CHECK((blocks[k].G - glmm.blocks[k].G).norm() == 0.0);
        if (blocks[k].kind == ResponseKind::Gaussian)
            CHECK((blocks[k].aux - glmm.blocks[k].aux).norm() == 0.0);
        if (blocks[k].kind == ResponseKind::StudentT) CHECK(blocks[k].nu == glmm.blocks[k].nu);
    }
}

TEST_CASE("rows may arrive interleaved and are re-packed by kind") {
    const fs::path path = temp_dir() / "interleaved.csv";
    write_file(path, "kind,z,aux,x.1\n"
                     "poisson,2,,1\n"
                     "gaussian,0.5,1.0,1\n"
                     "poisson,4,,1\n");
    Eigen::Index p = 0, r = 0;
    const auto blocks = io::read_data_csv(path.string(), p, r);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].kind == ResponseKind::Gaussian);
    CHECK(blocks[1].kind == ResponseKind::Poisson);
    CHECK(blocks[1].z.size() == 2);
}

TEST_CASE("malformed data files raise io errors") {
    Eigen::Index p = 0, r = 0;
    CHECK_THROWS_AS(io::read_data_csv("/nonexistent/data.csv", p, r), IoError);

    const fs::path bad_header = temp_dir() / "bad_header.csv";
    write_file(bad_header, "z,kind,aux\n");
    CHECK_THROWS_AS(io::read_data_csv(bad_header.string(), p, r), IoError);

    const fs::path ragged = temp_dir() / "ragged.csv";
    write_file(ragged, "kind,z,aux,x.1\npoisson,1,\n");
    CHECK_THROWS_AS(io::read_data_csv(ragged.string(), p, r), IoError);

    const fs::path missing_aux = temp_dir() / "missing_aux.csv";
    write_file(missing_aux, "kind,z,aux,x.1\ngaussian,1,,1\n");
    CHECK_THROWS_AS(io::read_data_csv(missing_aux.string(), p, r), IoError);
}

TEST_CASE("config parsing") {
    const fs::path dir = temp_dir();
    const GlmmSpec glmm = mixed_model();
    io::write_data_csv((dir / "cfg_data.csv").string(), glmm);

    SUBCASE("a full config loads and validates") {
        write_file(dir / "good.epr",
                   "# comment\n"
                   "data = cfg_data.csv\n"
                   "beta.family = gaussian\n"
                   "beta.kappa = 0.5\n"
                   "eta.scale = 2.0\n"
                   "xi.alpha = 0.1\n"
                   "sampler.draws = 12\n"
                   "sampler.acceptance = rate:0.5\n"
                   "sampler.seed = 9\n");
        const io::ModelConfig config = io::load_model_config((dir / "good.epr").string());
        CHECK(config.run.draws == 12);
        CHECK(config.run.seed == 9);
        CHECK(config.run.acceptance.mode == AcceptanceSetting::Mode::Rate);
        CHECK(config.glmm.blocks.size() == 3);
    }

    SUBCASE("unknown keys fail with their line") {
        write_file(dir / "unknown.epr",
                   "data = cfg_data.csv\n"
                   "sampler.dravs = 12\n");
        try {
            io::load_model_config((dir / "unknown.epr").string());
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
            CHECK(std::string(e.what()).find("sampler.dravs") != std::string::npos);
        }
    }

    SUBCASE("duplicate keys are rejected") {
        write_file(dir / "dup.epr", "data = a\ndata = b\n");
        CHECK_THROWS_AS(io::load_model_config((dir / "dup.epr").string()), ConfigError);
    }

    SUBCASE("missing data file is an io error") {
        write_file(dir / "missing.epr", "data = no_such_file.csv\n");
        CHECK_THROWS_AS(io::load_model_config((dir / "missing.epr").string()), IoError);
    }
}

TEST_CASE("acceptance flag syntax") {
    const AcceptanceSetting rate = io::parse_acceptance("rate:0.25");
    CHECK(rate.mode == AcceptanceSetting::Mode::Rate);
    CHECK(rate.value == doctest::Approx(0.25));
    const AcceptanceSetting omega = io::parse_acceptance("omega:1.5");
    CHECK(omega.mode == AcceptanceSetting::Mode::Omega);
    const AcceptanceSetting inf = io::parse_acceptance("omega:inf");
    CHECK(std::isinf(inf.value));
    CHECK_THROWS_AS(io::parse_acceptance("half"), ConfigError);
}

TEST_CASE("draw and summary writers") {
    GlmmSpec glmm;
    DataBlock b;
    b.kind = ResponseKind::Poisson;
    b.z = (Eigen::VectorXd(2) << 3, 1).finished();
    b.X = Eigen::MatrixXd::Ones(2, 1);
    b.G = Eigen::MatrixXd(2, 0);
    glmm.blocks.push_back(b);
    glmm.xi_alpha = 0.1;
    EprConfig config;
    config.draws = 5;
    config.seed = 4;
    const DrawSet set = epr_run(glmm, config);

    const fs::path dir = temp_dir();
    io::write_draws_csv((dir / "draws.csv").string(), set);
    std::ifstream in(dir / "draws.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 6);  // header + 5 draws

    const std::vector<double> probs{0.5};
    io::write_summary_csv((dir / "summary.csv").string(), summarize(set, {"beta"}, probs), probs);
    CHECK(fs::exists(dir / "summary.csv"));

    io::write_run_meta((dir / "meta.txt").string(), set, 0.01);
    CHECK(fs::exists(dir / "meta.txt"));

    // the latent guard refuses oversized emission
    CHECK_THROWS_AS(io::write_latent_csv((dir / "latent.csv").string(), set, 3), ConfigError);
    io::write_latent_csv((dir / "latent.csv").string(), set);
    CHECK(fs::exists(dir / "latent.csv"));
}
