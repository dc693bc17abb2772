#include "nlch/config.hpp"

#include "nlch/output.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace nlch {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
        throw ConfigError(section + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError(section + ": unknown field '" + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, const std::string& section, T& out) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(section + "." + key + ": wrong type");
    }
}

MaterialLaw law_from_json(const json& j, const std::string& section) {
    MaterialLaw law;
    if (j.is_number()) {
        law.value1 = law.value2 = j.get<double>();
        return law;
    }
    check_keys(j, section, {"kind", "value", "value1", "value2"});
    read(j, "kind", section, law.kind);
    if (law.kind == "constant") {
        read(j, "value", section, law.value1);
        law.value2 = law.value1;
    } else {
        read(j, "value1", section, law.value1);
        read(j, "value2", section, law.value2);
    }
    return law;
}

json law_to_json(const MaterialLaw& law) {
    if (law.kind == "constant") {
        return {{"kind", "constant"}, {"value", law.value1}};
    }
    return {{"kind", law.kind}, {"value1", law.value1}, {"value2", law.value2}};
}

double param(const std::map<std::string, double>& params, const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void rethrow_as_config(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

} // namespace

void validate_config(const SimConfig& cfg) {
    if (cfg.grid.nx < 1 || cfg.grid.ny < 1) {
        throw ConfigError("grid: nx and ny must be >= 1");
    }
    if (!(cfg.grid.lx > 0.0) || !(cfg.grid.ly > 0.0)) {
        throw ConfigError("grid: lx and ly must be positive");
    }
    if (static_cast<long>(cfg.grid.nx) * cfg.grid.ny > kMaxDenseCells) {
        throw ConfigError("grid: nx*ny must not exceed " + std::to_string(kMaxDenseCells));
    }
    rethrow_as_config([&] { make_kernel(cfg); });
    if (cfg.kernel.r_sub < 1 || cfg.kernel.r_near < 0.0) {
        throw ConfigError("kernel: r_sub must be >= 1 and r_near >= 0");
    }
    rethrow_as_config([&] { require_valid_potential(cfg.potential); });
    rethrow_as_config([&] { require_valid_fluid(cfg.fluid); });
    if (!(cfg.time.h > 0.0) || !std::isfinite(cfg.time.h)) {
        throw ConfigError("time: h must be positive");
    }
    if (cfg.time.n_steps < 0) {
        throw ConfigError("time: n_steps must be >= 0");
    }
    if (cfg.time.max_halvings < 0 || cfg.time.max_halvings > 3) {
        throw ConfigError("time: max_halvings must lie in [0,3]");
    }
    const SolverTolerances& t = cfg.tol;
    for (double v : {t.tol_couple, t.tol_mom, t.tol_div, t.tol_newton, t.tol_energy, t.tol_mass}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("solver: tolerances must be positive");
        }
    }
    if (t.max_outer < 1 || t.max_newton < 1 || t.max_krylov < 1) {
        throw ConfigError("solver: iteration limits must be >= 1");
    }
    if (cfg.output.cadence < 0) {
        throw ConfigError("output: cadence must be >= 0");
    }
    static const std::set<std::string> generators{"constant", "cosine", "tanh_blob", "random_smooth"};
    if (cfg.initial.snapshot.empty() && !generators.count(cfg.initial.generator)) {
        throw ConfigError("initial: unknown generator '" + cfg.initial.generator + "'");
    }
}

SimConfig config_from_json(const json& j) {
    SimConfig cfg;
    check_keys(j, "config", {"grid", "kernel", "potential", "fluid", "time", "solver", "initial", "output"});
    if (j.contains("grid")) {
        const json& g = j["grid"];
        check_keys(g, "grid", {"nx", "ny", "lx", "ly"});
        read(g, "nx", "grid", cfg.grid.nx);
        read(g, "ny", "grid", cfg.grid.ny);
        read(g, "lx", "grid", cfg.grid.lx);
        read(g, "ly", "grid", cfg.grid.ly);
    }
    if (j.contains("kernel")) {
        const json& k = j["kernel"];
        check_keys(k, "kernel", {"alpha", "c0", "C0", "omega", "r_sub", "r_near"});
        read(k, "alpha", "kernel", cfg.kernel.alpha);
        read(k, "c0", "kernel", cfg.kernel.c0);
        read(k, "C0", "kernel", cfg.kernel.C0);
        read(k, "r_sub", "kernel", cfg.kernel.r_sub);
        read(k, "r_near", "kernel", cfg.kernel.r_near);
        if (k.contains("omega")) {
            const json& o = k["omega"];
            check_keys(o, "kernel.omega", {"name", "params"});
            cfg.kernel.omega.params.clear();
            read(o, "name", "kernel.omega", cfg.kernel.omega.name);
            read(o, "params", "kernel.omega", cfg.kernel.omega.params);
        }
    }
    bool kappa_given = false;
    if (j.contains("potential")) {
        const json& p = j["potential"];
        check_keys(p, "potential", {"theta", "theta_c", "kappa", "clamp_eps"});
        read(p, "theta", "potential", cfg.potential.theta);
        read(p, "theta_c", "potential", cfg.potential.theta_c);
        read(p, "clamp_eps", "potential", cfg.potential.clamp_eps);
        kappa_given = p.contains("kappa");
        read(p, "kappa", "potential", cfg.potential.kappa);
    }
    if (!kappa_given) {
        cfg.potential.kappa = cfg.potential.theta_c;
    }
    if (j.contains("fluid")) {
        const json& f = j["fluid"];
        check_keys(f, "fluid", {"rho1", "rho2", "eta", "mobility"});
        read(f, "rho1", "fluid", cfg.fluid.rho1);
        read(f, "rho2", "fluid", cfg.fluid.rho2);
        if (f.contains("eta")) {
            cfg.fluid.eta = law_from_json(f["eta"], "fluid.eta");
        }
        if (f.contains("mobility")) {
            cfg.fluid.mobility = law_from_json(f["mobility"], "fluid.mobility");
        }
    }
    if (j.contains("time")) {
        const json& t = j["time"];
        check_keys(t, "time", {"h", "n_steps", "fallback_halving", "max_halvings"});
        read(t, "h", "time", cfg.time.h);
        read(t, "n_steps", "time", cfg.time.n_steps);
        read(t, "fallback_halving", "time", cfg.time.fallback_halving);
        read(t, "max_halvings", "time", cfg.time.max_halvings);
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, "solver", {"tol_couple", "tol_mom", "tol_div", "tol_newton", "tol_energy", "tol_mass",
                                 "max_outer", "max_newton", "max_krylov"});
        read(s, "tol_couple", "solver", cfg.tol.tol_couple);
        read(s, "tol_mom", "solver", cfg.tol.tol_mom);
        read(s, "tol_div", "solver", cfg.tol.tol_div);
        read(s, "tol_newton", "solver", cfg.tol.tol_newton);
        read(s, "tol_energy", "solver", cfg.tol.tol_energy);
        read(s, "tol_mass", "solver", cfg.tol.tol_mass);
        read(s, "max_outer", "solver", cfg.tol.max_outer);
        read(s, "max_newton", "solver", cfg.tol.max_newton);
        read(s, "max_krylov", "solver", cfg.tol.max_krylov);
    }
    if (j.contains("initial")) {
        const json& i = j["initial"];
        check_keys(i, "initial", {"generator", "params", "snapshot"});
        if (i.contains("params")) {
            cfg.initial.params.clear();
        }
        read(i, "generator", "initial", cfg.initial.generator);
        read(i, "params", "initial", cfg.initial.params);
        read(i, "snapshot", "initial", cfg.initial.snapshot);
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, "output", {"cadence", "directory"});
        read(o, "cadence", "output", cfg.output.cadence);
        read(o, "directory", "output", cfg.output.directory);
    }
    validate_config(cfg);
    return cfg;
}

json config_to_json(const SimConfig& cfg) {
    json j;
    j["grid"] = {{"nx", cfg.grid.nx}, {"ny", cfg.grid.ny}, {"lx", cfg.grid.lx}, {"ly", cfg.grid.ly}};
    j["kernel"] = {{"alpha", cfg.kernel.alpha},
                   {"c0", cfg.kernel.c0},
                   {"C0", cfg.kernel.C0},
                   {"omega", {{"name", cfg.kernel.omega.name}, {"params", cfg.kernel.omega.params}}},
                   {"r_sub", cfg.kernel.r_sub},
                   {"r_near", cfg.kernel.r_near}};
    j["potential"] = {{"theta", cfg.potential.theta},
                      {"theta_c", cfg.potential.theta_c},
                      {"kappa", cfg.potential.kappa},
                      {"clamp_eps", cfg.potential.clamp_eps}};
    j["fluid"] = {{"rho1", cfg.fluid.rho1},
                  {"rho2", cfg.fluid.rho2},
                  {"eta", law_to_json(cfg.fluid.eta)},
                  {"mobility", law_to_json(cfg.fluid.mobility)}};
    j["time"] = {{"h", cfg.time.h},
                 {"n_steps", cfg.time.n_steps},
                 {"fallback_halving", cfg.time.fallback_halving},
                 {"max_halvings", cfg.time.max_halvings}};
    j["solver"] = {{"tol_couple", cfg.tol.tol_couple}, {"tol_mom", cfg.tol.tol_mom},
                   {"tol_div", cfg.tol.tol_div},       {"tol_newton", cfg.tol.tol_newton},
                   {"tol_energy", cfg.tol.tol_energy}, {"tol_mass", cfg.tol.tol_mass},
                   {"max_outer", cfg.tol.max_outer},   {"max_newton", cfg.tol.max_newton},
                   {"max_krylov", cfg.tol.max_krylov}};
    j["initial"] = {{"generator", cfg.initial.generator}, {"params", cfg.initial.params}};
    if (!cfg.initial.snapshot.empty()) {
        j["initial"]["snapshot"] = cfg.initial.snapshot;
    }
    j["output"] = {{"cadence", cfg.output.cadence}, {"directory", cfg.output.directory}};
    return j;
}

SimConfig parse_config_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j);
}

SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_string(buffer.str());
}

Grid make_grid(const SimConfig& cfg) { return build_grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly); }

KernelSpec make_kernel(const SimConfig& cfg) {
    return make_kernel_spec(cfg.kernel.alpha, cfg.kernel.c0, cfg.kernel.C0, cfg.kernel.omega);
}

QuadratureOptions make_quadrature(const SimConfig& cfg) {
    QuadratureOptions q;
    q.r_sub = cfg.kernel.r_sub;
    q.r_near = cfg.kernel.r_near;
    return q;
}

StepperOptions make_stepper_options(const SimConfig& cfg) {
    StepperOptions o;
    o.tol = cfg.tol;
    o.fallback_halving = cfg.time.fallback_halving;
    o.max_halvings = cfg.time.max_halvings;
    return o;
}

InitialData make_initial_data(const SimConfig& cfg, const Grid& grid) {
    InitialData out;
    out.v = FaceField::Zero(grid.num_faces());
    if (!cfg.initial.snapshot.empty()) {
        const Snapshot snap = read_snapshot(cfg.initial.snapshot, grid);
        out.phi = snap.phi;
        out.v = snap.v;
        out.achieved_mean = out.phi.mean();
        if (!(std::abs(out.achieved_mean) < 1.0) || out.phi.cwiseAbs().maxCoeff() > 1.0) {
            throw ConfigError("initial: snapshot phi must satisfy |phi| <= 1 with mean in (-1,1)");
        }
        return out;
    }
    const auto& prm = cfg.initial.params;
    const std::string& gen = cfg.initial.generator;
    const int n = grid.num_cells();
    if (const double m = param(prm, "mean", 0.0); !(std::abs(m) < 1.0)) {
        throw ConfigError("initial.params.mean must lie in (-1,1)");
    }
    out.phi = CellField(n);
    const double two_pi = 2.0 * std::numbers::pi;
    if (gen == "constant") {
        out.phi.setConstant(param(prm, "mean", 0.0));
    } else if (gen == "cosine") {
        const double mean = param(prm, "mean", 0.0);
        const double amp = param(prm, "amplitude", 0.5);
        const double freq = param(prm, "frequency", 1.0);
        for (int c = 0; c < n; ++c) {
            const Point x = grid.cell_center(c);
            out.phi[c] = mean + amp * std::cos(two_pi * freq * x.x / grid.lx()) *
                                    std::cos(two_pi * freq * x.y / grid.ly());
        }
    } else if (gen == "tanh_blob") {
        const double cx = param(prm, "cx", 0.5 * grid.lx());
        const double cy = param(prm, "cy", 0.5 * grid.ly());
        const double radius = param(prm, "radius", 0.25 * std::min(grid.lx(), grid.ly()));
        const double width = param(prm, "width", 0.05);
        const double inside = param(prm, "inside", 0.9);
        const double outside = param(prm, "outside", -0.9);
        if (!(width > 0.0)) {
            throw ConfigError("initial.params.width must be positive");
        }
        for (int c = 0; c < n; ++c) {
            const Point x = grid.cell_center(c);
            const double r = std::hypot(x.x - cx, x.y - cy);
            out.phi[c] = outside + (inside - outside) * 0.5 * (1.0 - std::tanh((r - radius) / width));
        }
    } else if (gen == "random_smooth") {
        const double mean = param(prm, "mean", 0.0);
        const double amp = param(prm, "amplitude", 0.3);
        const int modes = static_cast<int>(param(prm, "modes", 4.0));
        const auto seed = static_cast<std::uint64_t>(param(prm, "seed", 1.0));
        if (modes < 1) {
            throw ConfigError("initial.params.modes must be >= 1");
        }
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        CellField wave = CellField::Zero(n);
        for (int kx = 0; kx <= modes; ++kx) {
            for (int ky = 0; ky <= modes; ++ky) {
                if (kx == 0 && ky == 0) {
                    continue;
                }
                const double a = coef(rng);
                for (int c = 0; c < n; ++c) {
                    const Point x = grid.cell_center(c);
                    wave[c] += a * std::cos(std::numbers::pi * kx * x.x / grid.lx()) *
                               std::cos(std::numbers::pi * ky * x.y / grid.ly());
                }
            }
        }
        const double peak = wave.cwiseAbs().maxCoeff();
        out.phi = CellField::Constant(n, mean) + (peak > 0.0 ? amp / peak : 0.0) * wave;
    } else {
        throw ConfigError("initial: unknown generator '" + gen + "'");
    }
    const double bound = 1.0 - kGeneratorMargin;
    out.phi = out.phi.cwiseMax(-bound).cwiseMin(bound);
    out.achieved_mean = out.phi.mean();
    if (!(std::abs(out.achieved_mean) < 1.0)) {
        throw ConfigError("initial: mean of generated phi must lie in (-1,1)");
    }
    return out;
}

} // namespace nlch
