// Command-line driver: validate, run, study, check.
// Exit codes: 0 all predicates pass, 1 a predicate or run failed, 2 usage or config error.

#include "nlch/config.hpp"
#include "nlch/output.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace nlch;

namespace {

fs::path output_dir(const SimConfig& cfg, const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("NLCH_OUTPUT_DIR"); env && *env) {
        return env;
    }
    return cfg.output.directory;
}

void print_predicates(const std::vector<PredicateResult>& preds) {
    for (const PredicateResult& p : preds) {
        std::cout << (p.passed ? "PASS " : "FAIL ") << p.name << "  " << p.detail << '\n';
    }
}

int cmd_validate(const std::string& path) {
    const SimConfig cfg = parse_config(path);
    std::cout << config_to_json(cfg).dump(2) << '\n';
    const InitialData init = make_initial_data(cfg, make_grid(cfg));
    std::cout << "initial mean " << init.achieved_mean << '\n';
    return 0;
}

int cmd_run(const std::string& path, const std::string& out_flag) {
    const SimConfig cfg = parse_config(path);
    const fs::path out = output_dir(cfg, out_flag);
    const auto form = build_form(cfg, out / "cache");
    try {
        const RunResult result = run_simulation(cfg, form, out);
        std::cout << "initial mean " << result.achieved_mean << ", " << cfg.time.n_steps << " steps\n";
        print_predicates(result.predicates);
        std::cout << "output in " << out.string() << '\n';
        return result.passed() ? 0 : 1;
    } catch (const StepFailure& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 1;
    }
}

int cmd_study(const std::string& path, int levels, const std::string& out_flag) {
    const SimConfig cfg = parse_config(path);
    const fs::path out = output_dir(cfg, out_flag);
    const auto form = build_form(cfg, out / "cache");
    const StudyReport rep = convergence_study(cfg, levels, form);
    for (std::size_t i = 0; i < rep.differences.size(); ++i) {
        std::cout << "h=" << rep.h[i] << " vs h=" << rep.h[i + 1] << "  diff " << rep.differences[i] << '\n';
    }
    for (double p : rep.orders) {
        std::cout << "order " << p << '\n';
    }
    fs::create_directories(out);
    std::ofstream(out / "study.json") << study_json(rep).dump(2) << '\n';
    if (!rep.complete) {
        std::cerr << "study aborted: " << rep.error << '\n';
        return 1;
    }
    return 0;
}

int cmd_check(const std::string& path, double tol_couple) {
    const auto rows = read_series(path);
    const auto preds = evaluate_series(rows, tol_couple);
    print_predicates(preds);
    for (const PredicateResult& p : preds) {
        if (!p.passed) {
            return 1;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal Cahn-Hilliard / Navier-Stokes solver"};
    app.require_subcommand(1);
    std::string config;
    std::string out_flag;
    int levels = 3;
    std::string series;
    double tol_couple = 1e-9;

    auto* validate = app.add_subcommand("validate", "Parse and echo a configuration");
    validate->add_option("config", config, "Configuration file (JSON)")->required();
    auto* run = app.add_subcommand("run", "Run a simulation");
    run->add_option("config", config, "Configuration file (JSON)")->required();
    run->add_option("-o,--output", out_flag, "Output directory (overrides NLCH_OUTPUT_DIR)");
    auto* study = app.add_subcommand("study", "Temporal self-convergence study");
    study->add_option("config", config, "Configuration file (JSON)")->required();
    study->add_option("--levels", levels, "Number of step sizes (2-4)")->check(CLI::Range(2, 4));
    study->add_option("-o,--output", out_flag, "Output directory (overrides NLCH_OUTPUT_DIR)");
    auto* check = app.add_subcommand("check", "Evaluate the predicates on a series file");
    check->add_option("series", series, "Series CSV")->required();
    check->add_option("--tol-couple", tol_couple, "Coupled residual tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        if (*validate) {
            return cmd_validate(config);
        }
        if (*run) {
            return cmd_run(config, out_flag);
        }
        if (*study) {
            return cmd_study(config, levels, out_flag);
        }
        return cmd_check(series, tol_couple);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
