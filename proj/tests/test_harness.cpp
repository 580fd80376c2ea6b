#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "fkmc/harness.hpp"

using namespace fkmc;

namespace {

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

std::string first_line(const std::string& s) {
    return s.substr(0, s.find('\n'));
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing, types, and round trip") {
    ExperimentConfig cfg = ExperimentConfig::from_string(
        "# comment line\n"
        "n_paths = 5000\n"
        "beta=1.25\n"
        "  boundary =  koch  \n"
        "\n"
        "oracle = true\n"
        "levels = 4, 8, 16\n");
    CHECK(cfg.has("n_paths"));
    CHECK(!cfg.has("missing"));
    CHECK(cfg.get_int("n_paths", 0) == 5000);
    CHECK(cfg.get_double("beta", 0.0) == doctest::Approx(1.25));
    CHECK(cfg.get_string("boundary", "") == "koch");
    CHECK(cfg.get_bool("oracle", false));
    CHECK(cfg.get_bool("absent", true));
    auto levels = cfg.get_list("levels", {});
    REQUIRE(levels.size() == 3);
    CHECK(levels[2] == doctest::Approx(16.0));

    CHECK(cfg.require_double("beta") == doctest::Approx(1.25));
    CHECK_THROWS_AS(cfg.require_double("absent"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.require_int("boundary"), std::invalid_argument);

    // serialize -> parse is the identity on entries
    ExperimentConfig back = ExperimentConfig::from_string(cfg.serialize());
    CHECK(back.entries() == cfg.entries());

    // overrides replace values
    cfg.set("beta", "2.5");
    CHECK(cfg.get_double("beta", 0.0) == doctest::Approx(2.5));

    CHECK_THROWS_AS(ExperimentConfig::from_string("this line has no equals\n"),
                    std::invalid_argument);
}

TEST_CASE("boundary construction from config") {
    ExperimentConfig koch = ExperimentConfig::from_string("boundary=koch\nlevel=3\n");
    PrefractalBoundary b = boundary_from_config(koch);
    CHECK(b.segments.size() == 3 * 64);
    CHECK(b.closed);

    ExperimentConfig line =
        ExperimentConfig::from_string("boundary=line\nhalf_width=2.5\n");
    PrefractalBoundary l = boundary_from_config(line);
    REQUIRE(l.segments.size() == 1);
    CHECK(l.total_length() == doctest::Approx(5.0));

    CHECK_THROWS_AS(boundary_from_config(ExperimentConfig::from_string("boundary=koch\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        boundary_from_config(ExperimentConfig::from_string("boundary=sphere\n")),
        std::invalid_argument);
}

TEST_CASE("kernel family produces a deterministic record") {
    ExperimentConfig cfg = ExperimentConfig::from_string(
        "boundary=line\nhalf_width=2\n"
        "x0_x=0.1\nx0_y=0.4\nx1_x=-0.3\nx1_y=-0.2\n"
        "t=0.7\nconstant=0.5\nn_paths=500\n");
    RunRecord rec = run_experiment("kernel", cfg, 99);
    CHECK(rec.family == "kernel");
    CHECK(count_lines(rec.csv) >= 2);  // header + at least one row
    CHECK(first_line(rec.csv).find("density") != std::string::npos);

    // identical seed and config give identical bytes; a new seed does not
    RunRecord again = run_experiment("kernel", cfg, 99);
    CHECK(again.csv == rec.csv);
    cfg.set("constant", "");
    cfg.set("beta", "0.9");
    RunRecord soft = run_experiment("kernel", cfg, 99);
    RunRecord other = run_experiment("kernel", cfg, 100);
    CHECK(soft.csv != other.csv);

    // metadata records how the run was produced
    auto meta = nlohmann::json::parse(rec.meta_json);
    CHECK(meta.at("family") == "kernel");
    CHECK(meta.at("seed") == 99);
    CHECK(meta.at("generator") == std::string(kGeneratorId));
    CHECK(meta.contains("config"));
    CHECK(meta.contains("wall_seconds"));
}

TEST_CASE("occupation and pz families share columns") {
    ExperimentConfig cfg = ExperimentConfig::from_string(
        "boundary=line\nhalf_width=8\n"
        "x0_x=0\nx0_y=0\nn_lo=1\nn_hi=2\nn_paths=400\noracle=false\n");
    RunRecord occ = run_experiment("occupation", cfg, 7);
    CHECK(first_line(occ.csv) ==
          "n,mean,mean_stderr,second_moment,ratio,b_n,oracle,pz_bound,frac_above");
    CHECK(count_lines(occ.csv) == 3);  // header + shells 1,2

    RunRecord pz = run_experiment("pz", cfg, 7);
    CHECK(first_line(pz.csv) == "n,frac_above,pz_bound,theta,mean,mean_stderr");
    CHECK(count_lines(pz.csv) == 3);
}

TEST_CASE("decay family fits a masses table from disk") {
    std::string path = "/tmp/fkmc_test_masses.csv";
    {
        std::ofstream out(path);
        out << "trunc_A,mass,mass_stderr\n";
        for (double A : {4.0, 8.0, 16.0, 32.0}) {
            double m = std::pow(A, -0.6);
            out << A << "," << m << "," << 0.01 * m << "\n";
        }
    }
    ExperimentConfig cfg =
        ExperimentConfig::from_string("masses_csv=" + path + "\n");
    RunRecord rec = run_experiment("decay", cfg, 1);
    CHECK(first_line(rec.csv).find("sigma") != std::string::npos);
    auto meta = nlohmann::json::parse(rec.meta_json);
    double sigma = meta.at("summary").at("sigma_hat").get<double>();
    CHECK(sigma == doctest::Approx(0.6).epsilon(1e-6));
    std::remove(path.c_str());
}

TEST_CASE("positivity family reports a verdict") {
    ExperimentConfig cfg = ExperimentConfig::from_string(
        "boundary=line\nhalf_width=8\n"
        "x0_x=0\nx0_y=0.5\nt=1\nbeta=0.5\n"
        "mesh_levels=3\nsamples=200000\n");
    RunRecord rec = run_experiment("positivity", cfg, 3);
    CHECK(first_line(rec.csv).find("verdict") != std::string::npos);
    CHECK(rec.csv.find("finite") != std::string::npos);
}

TEST_CASE("unknown family and bad config map to argument errors") {
    ExperimentConfig cfg;
    CHECK_THROWS_AS(run_experiment("frobnicate", cfg, 1), std::invalid_argument);
    // kernel without coordinates
    ExperimentConfig missing =
        ExperimentConfig::from_string("boundary=line\nhalf_width=2\n");
    CHECK_THROWS_AS(run_experiment("kernel", missing, 1), std::invalid_argument);
}

TEST_CASE("run records land on disk with directories created") {
    RunRecord rec;
    rec.family = "kernel";
    rec.csv = "a,b\n1,2\n";
    rec.meta_json = "{\"family\":\"kernel\"}";
    std::string prefix = "/tmp/fkmc_record_dir/sub/run1";
    write_run_record(rec, prefix);
    std::ifstream csv(prefix + ".csv");
    REQUIRE(csv.good());
    std::stringstream got;
    got << csv.rdbuf();
    CHECK(got.str() == rec.csv);
    std::ifstream js(prefix + ".json");
    REQUIRE(js.good());
    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".json").c_str());
}

}  // TEST_SUITE
