#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlch/config.hpp"
#include "nlch/output.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace nlch;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("nlch_test_cli_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string error_of(const std::string& text) {
    try {
        parse_config_string(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NLCH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

SimConfig small_config(int n_steps) {
    SimConfig cfg;
    cfg.grid.nx = 8;
    cfg.grid.ny = 8;
    cfg.fluid.rho1 = 1.0;
    cfg.fluid.rho2 = 3.0;
    cfg.time.n_steps = n_steps;
    return cfg;
}

} // namespace

TEST_CASE("defaults are applied to a minimal file") {
    const SimConfig cfg = parse_config_string(R"({"grid": {"nx": 8, "ny": 4}, "time": {"h": 0.002}})");
    CHECK(cfg.grid.nx == 8);
    CHECK(cfg.grid.ny == 4);
    CHECK(cfg.time.h == 0.002);
    CHECK(cfg.kernel.alpha == 1.5);
    CHECK(cfg.potential.theta == 1.0);
    CHECK(cfg.potential.theta_c == 2.0);
    CHECK(cfg.potential.kappa == 2.0);
    CHECK(cfg.fluid.rho1 == 1.0);
    CHECK(cfg.fluid.rho2 == 1.0);
    CHECK(cfg.fluid.eta(0.3) == 1.0);
    CHECK(cfg.fluid.mobility(-0.3) == 1.0);
    CHECK(cfg.tol.tol_couple == 1e-9);
    CHECK(cfg.tol.max_outer == 50);
}

TEST_CASE("validation errors name the field") {
    CHECK(error_of(R"({"potential": {"theta": 2.0, "theta_c": 2.0}})") == "potential: require theta < theta_c");
    CHECK(error_of(R"({"potential": {"theta": 3.0}})") == "potential: require theta < theta_c");
    CHECK(error_of(R"({"kernel": {"alpha": 2.0}})") == "kernel: alpha must lie in (1,2)");
    CHECK(error_of(R"({"grid": {"nx": 0}})").find("grid") == 0);
    CHECK(error_of(R"({"grid": {"nz": 3}})").find("unknown field 'nz'") != std::string::npos);
    CHECK(error_of(R"({"time": {"h": "fast"}})").find("time.h") != std::string::npos);
    const std::string parse = error_of("{\"grid\":\n {\"nx\": }");
    CHECK(parse.find("line 2") != std::string::npos);
    CHECK(parse.find("column") != std::string::npos);
}

TEST_CASE("echo round trip") {
    SimConfig cfg = small_config(4);
    cfg.kernel.omega = OmegaSpec{"sinusoidal", {{"amplitude", 0.25}}};
    cfg.fluid.eta = MaterialLaw{"linear", 1.0, 2.0};
    cfg.initial.generator = "random_smooth";
    cfg.initial.params = {{"mean", 0.1}, {"amplitude", 0.4}, {"modes", 3}, {"seed", 11}};
    cfg.tol.tol_energy = 3e-9;
    const nlohmann::json echo = config_to_json(cfg);
    const SimConfig again = parse_config_string(echo.dump());
    CHECK(config_to_json(again) == echo);
    CHECK(config_to_json(parse_config_string(config_to_json(again).dump(2))) == echo);
}

TEST_CASE("initial data generators") {
    const Grid g = build_grid(16, 16, 1.0, 1.0);
    SimConfig cfg = small_config(0);
    cfg.initial.generator = "cosine";
    cfg.initial.params = {{"mean", 0.2}, {"amplitude", 0.5}};
    InitialData d = make_initial_data(cfg, g);
    CHECK(d.achieved_mean == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(d.v.cwiseAbs().maxCoeff() == 0.0);
    cfg.initial.params = {{"mean", 0.5}, {"amplitude", 0.9}};
    d = make_initial_data(cfg, g);
    CHECK(d.phi.cwiseAbs().maxCoeff() <= 1.0 - kGeneratorMargin);
    CHECK(d.achieved_mean == doctest::Approx(d.phi.mean()).epsilon(1e-15));
    for (const char* gen : {"tanh_blob", "random_smooth", "constant"}) {
        cfg.initial.generator = gen;
        cfg.initial.params = {};
        d = make_initial_data(cfg, g);
        CHECK(d.phi.cwiseAbs().maxCoeff() <= 1.0 - kGeneratorMargin);
        CHECK(std::abs(d.achieved_mean) < 1.0);
    }
    cfg.initial.generator = "constant";
    cfg.initial.params = {{"mean", 1.0}};
    CHECK_THROWS_AS(make_initial_data(cfg, g), ConfigError);
}

TEST_CASE("series rows and constant runs") {
    const auto form = build_form(small_config(0), {});
    const fs::path dir0 = scratch("zero");
    const RunResult r0 = run_simulation(small_config(0), form, dir0);
    const auto rows0 = read_series(dir0 / "series.csv");
    CHECK(rows0.size() == 1);
    CHECK(r0.passed());
    CHECK(fs::exists(dir0 / "summary.json"));
    CHECK(fs::exists(dir0 / "config_echo.json"));
    CHECK(fs::exists(dir0 / "snap_000000.vtk"));

    SimConfig cfg = small_config(10);
    cfg.initial.generator = "constant";
    cfg.initial.params = {{"mean", 0.3}};
    const fs::path dir = scratch("constant");
    const RunResult r = run_simulation(cfg, form, dir);
    const auto rows = read_series(dir / "series.csv");
    REQUIRE(rows.size() == 11);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].step == int(i));
        CHECK(std::abs(rows[i].E_tot_h - rows[0].E_tot_h) <= 1e-12);
        if (i > 0) {
            CHECK(rows[i].t > rows[i - 1].t);
        }
    }
    CHECK(r.passed());
    // write/read preserves every digit
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].E_tot_h == r.rows[i].E_tot_h);
        CHECK(rows[i].mass == r.rows[i].mass);
        CHECK(rows[i].coupled_residual == r.rows[i].coupled_residual);
    }
    for (const PredicateResult& p : evaluate_series(rows)) {
        CHECK_MESSAGE(p.passed, p.name << ": " << p.detail);
    }

    std::vector<SeriesRow> bad = rows;
    bad.back().mass += 1e-6;
    bool mass_failed = false;
    for (const PredicateResult& p : evaluate_series(bad)) {
        if (p.name == "mass") {
            mass_failed = !p.passed;
        }
    }
    CHECK(mass_failed);
}

TEST_CASE("snapshot round trip is exact") {
    const Grid g = build_grid(7, 5, 1.0, 0.7);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SimState s;
    s.phi = CellField(g.num_cells());
    s.mu = CellField(g.num_cells());
    s.flow.p = CellField(g.num_cells());
    s.flow.v = FaceField(g.num_faces());
    for (auto* f : {&s.phi, &s.mu, &s.flow.p, &s.flow.v}) {
        for (auto& x : *f) {
            x = u(rng) / 3.0;
        }
    }
    s.t = 0.1 + 1.0 / 3.0;
    s.k = 123;
    const fs::path path = scratch("snap") / "s.vtk";
    write_snapshot(path, g, s);
    const Snapshot back = read_snapshot(path, g);
    CHECK(back.phi == s.phi);
    CHECK(back.mu == s.mu);
    CHECK(back.p == s.flow.p);
    CHECK(back.v == s.flow.v);
    CHECK(back.t == s.t);
    CHECK(back.k == s.k);
    CHECK_THROWS_AS(read_snapshot(path, build_grid(5, 7, 1.0, 0.7)), std::runtime_error);

    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# vtk DataFile", 0) == 0);

    // a snapshot can seed a run
    SimConfig cfg;
    cfg.grid = {7, 5, 1.0, 0.7};
    cfg.initial.snapshot = path.string();
    const InitialData d = make_initial_data(cfg, g);
    CHECK(d.phi == s.phi);
    CHECK(d.v == s.flow.v);
}

TEST_CASE("convergence study degenerate requests") {
    SimConfig cfg = small_config(4);
    cfg.initial.generator = "cosine";
    cfg.initial.params = {{"mean", 0.2}, {"amplitude", 0.5}};
    const auto form = build_form(cfg, {});
    const StudyReport same = convergence_study_steps(cfg, {1e-3, 1e-3}, 4e-3, form);
    REQUIRE(same.differences.size() == 1);
    CHECK(same.differences[0] == 0.0);

    cfg.initial.generator = "constant";
    cfg.initial.params = {{"mean", -0.2}};
    const StudyReport still = convergence_study(cfg, 3, form);
    REQUIRE(still.differences.size() == 2);
    CHECK(still.complete);
    for (double d : still.differences) {
        CHECK(d <= cfg.tol.tol_couple);
    }
    CHECK_THROWS_AS(convergence_study(cfg, 5, form), std::invalid_argument);
    CHECK(study_json(still)["differences"].size() == 2);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    write_file(dir / "good.json", R"({"grid": {"nx": 6, "ny": 6}, "time": {"h": 0.001, "n_steps": 2},
        "fluid": {"rho1": 1, "rho2": 3},
        "initial": {"generator": "cosine", "params": {"mean": 0.2, "amplitude": 0.5}}})");
    write_file(dir / "bad_theta.json", R"({"potential": {"theta": 3}})");
    write_file(dir / "broken.json", "{\"grid\":\n {\"nx\": }");
    CHECK(run_cli("validate " + (dir / "good.json").string()) == 0);
    CHECK(run_cli("validate " + (dir / "bad_theta.json").string()) == 2);
    CHECK(run_cli("validate " + (dir / "broken.json").string()) == 2);
    CHECK(run_cli("validate " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("") == 2);

    CHECK(run_cli("run " + (dir / "good.json").string() + " -o " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "series.csv"));
    CHECK(read_series(dir / "out" / "series.csv").size() == 3);
    CHECK(run_cli("check " + (dir / "out" / "series.csv").string()) == 0);

    const std::string env_run = "NLCH_OUTPUT_DIR=" + (dir / "env").string() + " " + std::string(NLCH_CLI_PATH) +
                                " run " + (dir / "good.json").string() + " > /dev/null 2>&1";
    CHECK(std::system(env_run.c_str()) == 0);
    CHECK(fs::exists(dir / "env" / "series.csv"));

    auto rows = read_series(dir / "out" / "series.csv");
    rows.back().max_abs_phi = 1.0;
    write_series(dir / "violated.csv", rows);
    CHECK(run_cli("check " + (dir / "violated.csv").string()) == 1);

    CHECK(run_cli("study " + (dir / "good.json").string() + " --levels 2 -o " + (dir / "study").string()) == 0);
    CHECK(fs::exists(dir / "study" / "study.json"));
}
