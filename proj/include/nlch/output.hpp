#pragma once

/// @file output.hpp
/// @brief Trajectory output (CSV series, legacy VTK snapshots, JSON summary),
/// whole-run drivers and the temporal self-convergence study.

#include "nlch/config.hpp"
#include "nlch/state.hpp"
#include "nlch/stepper.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace nlch {

/// One row of the series file.
struct SeriesRow {
    int step = 0;
    double t = 0.0;
    double h = 0.0;
    double E_kin = 0.0;
    double E_free = 0.0;
    double E_tot = 0.0;
    double E_tot_h = 0.0;
    double dissipation = 0.0;
    double slack = 0.0;
    double tol_energy = 0.0;
    double mass = 0.0;
    double max_abs_phi = 0.0;
    int outer_iterations = 0;
    int newton_iterations = 0;
    double coupled_residual = 0.0;
};

/// Row for the initial state (no dissipation, zero slack).
SeriesRow initial_row(const Stepper& stepper, const SimState& state, double h);
SeriesRow report_row(const StepReport& report);

/// Header plus rows, 17 significant digits.
void write_series(std::ostream& out, const std::vector<SeriesRow>& rows);
void write_series(const std::filesystem::path& path, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series(const std::filesystem::path& path);

struct Snapshot {
    CellField phi;
    CellField mu;
    CellField p;
    FaceField v;
    double t = 0.0;
    int k = 0;
};

/// Legacy VTK STRUCTURED_POINTS: φ, μ, p as cell scalars, v interpolated to
/// cell centers as vectors, and the face velocity in a dataset-level FIELD
/// block so that read_snapshot restores every field exactly.
void write_snapshot(const std::filesystem::path& path, const Grid& grid, const SimState& state);
/// Throws std::runtime_error on malformed files or a grid mismatch.
Snapshot read_snapshot(const std::filesystem::path& path, const Grid& grid);

struct PredicateResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Energy (slack and monotone E_tot_h), mass (drift ≤ 1e-10 from row 0),
/// bounds (max|φ| < 1) and residual (≤ tol_couple) over a series.
std::vector<PredicateResult> evaluate_series(const std::vector<SeriesRow>& rows, double tol_couple = 1e-9,
                                             double tol_mass_total = 1e-10);

/// Assembles the form for cfg, reusing <cache_dir>/form_<key>.bin when present.
std::shared_ptr<const NonlocalForm> build_form(const SimConfig& cfg, const std::filesystem::path& cache_dir);

struct RunResult {
    Trajectory trajectory;
    std::vector<SeriesRow> rows;
    std::vector<PredicateResult> predicates;
    double achieved_mean = 0.0;
    bool passed() const;
};

/// Runs cfg and, if out_dir is non-empty, writes series.csv, snap_XXXXXX.vtk,
/// summary.json and config_echo.json there.
RunResult run_simulation(const SimConfig& cfg, std::shared_ptr<const NonlocalForm> form,
                         const std::filesystem::path& out_dir = {});

nlohmann::json summary_json(const SimConfig& cfg, const RunResult& result);

struct StudyReport {
    std::vector<double> h;
    std::vector<int> n_steps;
    std::vector<double> differences; // ‖φ^(h_i)(T) − φ^(h_{i+1})(T)‖₂
    std::vector<double> orders;      // log₂ of successive difference ratios
    double T = 0.0;
    bool complete = true;
    std::string error;
};

/// Runs cfg at h, h/2, …, h/2^(levels−1) to T = h·n_steps (2 ≤ levels ≤ 4).
StudyReport convergence_study(const SimConfig& cfg, int levels, std::shared_ptr<const NonlocalForm> form);

/// Same with an explicit list of step sizes; each must divide T into an
/// integer number of steps. Adjacent entries are compared.
StudyReport convergence_study_steps(const SimConfig& cfg, const std::vector<double>& hs, double T,
                                    std::shared_ptr<const NonlocalForm> form);

nlohmann::json study_json(const StudyReport& report);

} // namespace nlch
