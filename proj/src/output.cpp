#include "nlch/output.hpp"

#include "nlch/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nlch {

using nlohmann::json;

namespace {

constexpr const char* kSeriesHeader =
    "step,t,h,E_kin,E_free,E_tot,E_tot_h,dissipation,slack,tol_energy,mass,max_abs_phi,"
    "outer_iterations,newton_iterations,coupled_residual";

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::runtime_error("malformed number '" + s + "'");
    }
    return v;
}

void write_values(std::ostream& out, const Eigen::VectorXd& x, int per_line) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out << fmt(x[i]) << ((i + 1) % per_line == 0 || i + 1 == x.size() ? '\n' : ' ');
    }
}

Eigen::VectorXd read_values(std::istream& in, Eigen::Index n) {
    Eigen::VectorXd x(n);
    std::string tok;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(in >> tok)) {
            throw std::runtime_error("snapshot: unexpected end of data");
        }
        x[i] = parse_double(tok);
    }
    return x;
}

void expect(std::istream& in, const std::string& word) {
    std::string tok;
    if (!(in >> tok) || tok != word) {
        throw std::runtime_error("snapshot: expected '" + word + "', found '" + tok + "'");
    }
}

} // namespace

SeriesRow initial_row(const Stepper& stepper, const SimState& state, double h) {
    const EnergyComponents e =
        energy_components(stepper.grid(), stepper.form(), stepper.fluid(), stepper.potential(), state.phi,
                          state.flow.v, h);
    SeriesRow r;
    r.step = state.k;
    r.t = state.t;
    r.h = h;
    r.E_kin = e.kinetic;
    r.E_free = e.free();
    r.E_tot = e.total();
    r.E_tot_h = e.total_h();
    r.mass = state.phi.mean();
    r.max_abs_phi = state.phi.cwiseAbs().maxCoeff();
    return r;
}

SeriesRow report_row(const StepReport& rep) {
    const EnergyComponents& e = rep.budget.after;
    SeriesRow r;
    r.step = rep.step;
    r.t = rep.t;
    r.h = rep.h;
    r.E_kin = e.kinetic;
    r.E_free = e.free();
    r.E_tot = e.total();
    r.E_tot_h = e.total_h();
    r.dissipation = rep.dissipation();
    r.slack = rep.budget.slack;
    r.tol_energy = rep.tol_energy;
    r.mass = rep.mass;
    r.max_abs_phi = rep.max_abs_phi;
    r.outer_iterations = rep.outer_iterations;
    r.newton_iterations = rep.newton_iterations;
    r.coupled_residual = rep.coupled_residual;
    return r;
}

void write_series(std::ostream& out, const std::vector<SeriesRow>& rows) {
    out << kSeriesHeader << '\n';
    for (const SeriesRow& r : rows) {
        out << r.step << ',' << fmt(r.t) << ',' << fmt(r.h) << ',' << fmt(r.E_kin) << ',' << fmt(r.E_free) << ','
            << fmt(r.E_tot) << ',' << fmt(r.E_tot_h) << ',' << fmt(r.dissipation) << ',' << fmt(r.slack) << ','
            << fmt(r.tol_energy) << ',' << fmt(r.mass) << ',' << fmt(r.max_abs_phi) << ',' << r.outer_iterations
            << ',' << r.newton_iterations << ',' << fmt(r.coupled_residual) << '\n';
    }
}

void write_series(const std::filesystem::path& path, const std::vector<SeriesRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_series(out, rows);
}

std::vector<SeriesRow> read_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kSeriesHeader) {
        throw std::runtime_error("series: unexpected header in " + path.string());
    }
    std::vector<SeriesRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 15) {
            throw std::runtime_error("series: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                                     " fields");
        }
        try {
            SeriesRow r;
            r.step = std::stoi(f[0]);
            r.t = parse_double(f[1]);
            r.h = parse_double(f[2]);
            r.E_kin = parse_double(f[3]);
            r.E_free = parse_double(f[4]);
            r.E_tot = parse_double(f[5]);
            r.E_tot_h = parse_double(f[6]);
            r.dissipation = parse_double(f[7]);
            r.slack = parse_double(f[8]);
            r.tol_energy = parse_double(f[9]);
            r.mass = parse_double(f[10]);
            r.max_abs_phi = parse_double(f[11]);
            r.outer_iterations = std::stoi(f[12]);
            r.newton_iterations = std::stoi(f[13]);
            r.coupled_residual = parse_double(f[14]);
            rows.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("series: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_snapshot(const std::filesystem::path& path, const Grid& grid, const SimState& state) {
    require_cell_field(grid, state.phi, "snapshot phi");
    require_face_field(grid, state.flow.v, "snapshot v");
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    const int n = grid.num_cells();
    const CellField mu = state.mu.size() == n ? state.mu : CellField::Zero(n);
    const CellField p = state.flow.p.size() == n ? state.flow.p : CellField::Zero(n);
    out << "# vtk DataFile Version 3.0\n";
    out << "phase field snapshot step " << state.k << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << grid.nx() + 1 << ' ' << grid.ny() + 1 << " 1\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << fmt(grid.hx()) << ' ' << fmt(grid.hy()) << " 1\n";
    out << "FIELD FieldData 2\n";
    out << "state 2 1 double\n" << fmt(state.t) << ' ' << state.k << '\n';
    out << "face_velocity 1 " << grid.num_faces() << " double\n";
    write_values(out, state.flow.v, 8);
    out << "CELL_DATA " << n << '\n';
    for (const auto& [name, field] : {std::pair<const char*, const CellField*>{"phi", &state.phi},
                                      {"mu", &mu},
                                      {"p", &p}}) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        write_values(out, *field, 8);
    }
    const Eigen::VectorXd vc = cell_center_velocity(grid, state.flow.v);
    out << "VECTORS velocity double\n";
    for (int c = 0; c < n; ++c) {
        out << fmt(vc[2 * c]) << ' ' << fmt(vc[2 * c + 1]) << " 0\n";
    }
}

Snapshot read_snapshot(const std::filesystem::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) {
        throw std::runtime_error("snapshot: not a legacy VTK file");
    }
    std::getline(in, line);
    expect(in, "ASCII");
    expect(in, "DATASET");
    expect(in, "STRUCTURED_POINTS");
    expect(in, "DIMENSIONS");
    int dx = 0;
    int dy = 0;
    int dz = 0;
    in >> dx >> dy >> dz;
    if (dx != grid.nx() + 1 || dy != grid.ny() + 1) {
        throw std::runtime_error("snapshot: grid dimensions do not match");
    }
    Snapshot s;
    const int n = grid.num_cells();
    std::string tok;
    while (in >> tok) {
        if (tok == "ORIGIN" || tok == "SPACING") {
            std::getline(in, line);
        } else if (tok == "FIELD") {
            std::string name;
            int arrays = 0;
            in >> name >> arrays;
            for (int a = 0; a < arrays; ++a) {
                std::string aname;
                std::string type;
                int comps = 0;
                Eigen::Index tuples = 0;
                in >> aname >> comps >> tuples >> type;
                const Eigen::VectorXd vals = read_values(in, comps * tuples);
                if (aname == "state" && vals.size() == 2) {
                    s.t = vals[0];
                    s.k = static_cast<int>(vals[1]);
                } else if (aname == "face_velocity") {
                    if (vals.size() != grid.num_faces()) {
                        throw std::runtime_error("snapshot: face velocity length mismatch");
                    }
                    s.v = vals;
                }
            }
        } else if (tok == "CELL_DATA") {
            int count = 0;
            in >> count;
            if (count != n) {
                throw std::runtime_error("snapshot: cell count mismatch");
            }
        } else if (tok == "SCALARS") {
            std::string name;
            std::string type;
            int comps = 1;
            in >> name >> type >> comps;
            expect(in, "LOOKUP_TABLE");
            in >> tok;
            const CellField vals = read_values(in, n);
            if (name == "phi") {
                s.phi = vals;
            } else if (name == "mu") {
                s.mu = vals;
            } else if (name == "p") {
                s.p = vals;
            }
        } else if (tok == "VECTORS") {
            in >> tok >> tok;
            read_values(in, 3 * static_cast<Eigen::Index>(n));
        } else {
            throw std::runtime_error("snapshot: unexpected token '" + tok + "'");
        }
    }
    if (s.phi.size() != n || s.v.size() != grid.num_faces()) {
        throw std::runtime_error("snapshot: missing phi or face velocity");
    }
    if (s.mu.size() != n) {
        s.mu = CellField::Zero(n);
    }
    if (s.p.size() != n) {
        s.p = CellField::Zero(n);
    }
    return s;
}

std::vector<PredicateResult> evaluate_series(const std::vector<SeriesRow>& rows, double tol_couple,
                                             double tol_mass_total) {
    std::vector<PredicateResult> out;
    PredicateResult energy{"energy", true, ""};
    PredicateResult mass{"mass", true, ""};
    PredicateResult bounds{"bounds", true, ""};
    PredicateResult residual{"residual", true, ""};
    if (rows.empty()) {
        for (PredicateResult* p : {&energy, &mass, &bounds, &residual}) {
            p->passed = false;
            p->detail = "empty series";
        }
        return {energy, mass, bounds, residual};
    }
    double worst_drift = 0.0;
    double worst_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SeriesRow& r = rows[i];
        if (i > 0) {
            if (!(r.slack >= -r.tol_energy) && energy.passed) {
                energy.passed = false;
                energy.detail = "slack " + fmt(r.slack) + " at step " + std::to_string(r.step);
            }
            if (!(r.E_tot_h <= rows[i - 1].E_tot_h + r.tol_energy) && energy.passed) {
                energy.passed = false;
                energy.detail = "E_tot_h increased at step " + std::to_string(r.step);
            }
            if (!(r.coupled_residual <= tol_couple) && residual.passed) {
                residual.passed = false;
                residual.detail = "residual " + fmt(r.coupled_residual) + " at step " + std::to_string(r.step);
            }
            worst_slack = std::min(worst_slack, r.slack);
        }
        worst_drift = std::max(worst_drift, std::abs(r.mass - rows.front().mass));
        if (!(r.max_abs_phi < 1.0) && bounds.passed) {
            bounds.passed = false;
            bounds.detail = "max|phi| = " + fmt(r.max_abs_phi) + " at step " + std::to_string(r.step);
        }
    }
    mass.passed = worst_drift <= tol_mass_total;
    mass.detail = "max drift " + fmt(worst_drift);
    if (energy.passed) {
        energy.detail = rows.size() > 1 ? "min slack " + fmt(worst_slack) : "no steps";
    }
    return {energy, mass, bounds, residual};
}

std::shared_ptr<const NonlocalForm> build_form(const SimConfig& cfg, const std::filesystem::path& cache_dir) {
    const Grid grid = make_grid(cfg);
    const KernelSpec spec = make_kernel(cfg);
    const QuadratureOptions quad = make_quadrature(cfg);
    if (cache_dir.empty()) {
        return std::make_shared<const NonlocalForm>(assemble_form(grid, spec, quad));
    }
    return std::make_shared<const NonlocalForm>(assemble_form_cached(grid, spec, quad, cache_dir));
}

bool RunResult::passed() const {
    for (const PredicateResult& p : predicates) {
        if (!p.passed) {
            return false;
        }
    }
    return true;
}

RunResult run_simulation(const SimConfig& cfg, std::shared_ptr<const NonlocalForm> form,
                         const std::filesystem::path& out_dir) {
    const Grid grid = make_grid(cfg);
    const InitialData init = make_initial_data(cfg, grid);
    Stepper stepper(grid, std::move(form), cfg.fluid, cfg.potential, make_stepper_options(cfg));
    RunResult result;
    result.achieved_mean = init.achieved_mean;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir / "config_echo.json") << config_to_json(cfg).dump(2) << '\n';
    }
    auto snapshot_name = [&](int k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "snap_%06d.vtk", k);
        return out_dir / buf;
    };
    RunOptions ropts;
    ropts.h = cfg.time.h;
    ropts.n_steps = cfg.time.n_steps;
    ropts.snapshot_every = cfg.output.cadence;
    try {
        result.trajectory = run(stepper, init.phi, init.v, ropts, [&](const SimState&, const StepReport& rep) {
            result.rows.push_back(report_row(rep));
        });
    } catch (...) {
        if (!out_dir.empty()) {
            write_series(out_dir / "series.csv", result.rows);
        }
        throw;
    }
    result.rows.insert(result.rows.begin(), initial_row(stepper, result.trajectory.initial, cfg.time.h));
    result.predicates = evaluate_series(result.rows, cfg.tol.tol_couple);
    if (!out_dir.empty()) {
        write_series(out_dir / "series.csv", result.rows);
        for (const SimState& s : result.trajectory.snapshots) {
            write_snapshot(snapshot_name(s.k), grid, s);
        }
        std::ofstream(out_dir / "summary.json") << summary_json(cfg, result).dump(2) << '\n';
    }
    return result;
}

json summary_json(const SimConfig& cfg, const RunResult& result) {
    json j;
    j["n_steps"] = cfg.time.n_steps;
    j["h"] = cfg.time.h;
    j["achieved_initial_mean"] = result.achieved_mean;
    j["passed"] = result.passed();
    json preds = json::object();
    for (const PredicateResult& p : result.predicates) {
        preds[p.name] = {{"passed", p.passed}, {"detail", p.detail}};
    }
    j["predicates"] = preds;
    if (!result.rows.empty()) {
        const SeriesRow& last = result.rows.back();
        j["final"] = {{"t", last.t}, {"E_tot", last.E_tot}, {"E_tot_h", last.E_tot_h}, {"mass", last.mass},
                      {"max_abs_phi", last.max_abs_phi}};
    }
    return j;
}

StudyReport convergence_study_steps(const SimConfig& cfg, const std::vector<double>& hs, double T,
                                    std::shared_ptr<const NonlocalForm> form) {
    if (hs.size() < 2) {
        throw std::invalid_argument("convergence_study: need at least two step sizes");
    }
    if (!(T > 0.0)) {
        throw std::invalid_argument("convergence_study: T must be positive");
    }
    StudyReport rep;
    rep.T = T;
    const Grid grid = make_grid(cfg);
    std::vector<CellField> finals;
    for (double h : hs) {
        const double steps = T / h;
        const int n = static_cast<int>(std::lround(steps));
        if (!(h > 0.0) || n < 1 || std::abs(steps - n) > 1e-9 * steps) {
            throw std::invalid_argument("convergence_study: h must divide T");
        }
        SimConfig c = cfg;
        c.time.h = h;
        c.time.n_steps = n;
        c.output.cadence = 0;
        try {
            const RunResult r = run_simulation(c, form);
            finals.push_back(r.trajectory.final_state.phi);
        } catch (const std::exception& e) {
            rep.complete = false;
            rep.error = e.what();
            break;
        }
        rep.h.push_back(h);
        rep.n_steps.push_back(n);
        if (finals.size() >= 2) {
            const CellField d = finals[finals.size() - 1] - finals[finals.size() - 2];
            rep.differences.push_back(cell_norm(grid, d));
        }
        if (rep.differences.size() >= 2) {
            const std::size_t m = rep.differences.size();
            rep.orders.push_back(std::log2(rep.differences[m - 2] / rep.differences[m - 1]));
        }
    }
    return rep;
}

StudyReport convergence_study(const SimConfig& cfg, int levels, std::shared_ptr<const NonlocalForm> form) {
    if (levels < 2 || levels > 4) {
        throw std::invalid_argument("convergence_study: levels must lie in [2,4]");
    }
    std::vector<double> hs;
    for (int l = 0; l < levels; ++l) {
        hs.push_back(cfg.time.h / static_cast<double>(1 << l));
    }
    return convergence_study_steps(cfg, hs, cfg.time.h * cfg.time.n_steps, std::move(form));
}

json study_json(const StudyReport& r) {
    return {{"T", r.T},          {"h", r.h},           {"n_steps", r.n_steps}, {"differences", r.differences},
            {"orders", r.orders}, {"complete", r.complete}, {"error", r.error}};
}

} // namespace nlch
