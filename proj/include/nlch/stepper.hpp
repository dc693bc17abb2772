#pragma once

/// @file stepper.hpp
/// @brief Coupled implicit time step: Picard iteration between the phase
/// subsystem and the momentum solve, plus the trajectory driver.

#include "nlch/diagnostics.hpp"
#include "nlch/flow.hpp"
#include "nlch/nonlocal_form.hpp"
#include "nlch/phase.hpp"
#include "nlch/potential.hpp"
#include "nlch/smoothing.hpp"
#include "nlch/state.hpp"

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlch {

struct SolverTolerances {
    double tol_couple = 1e-9;
    double tol_mom = 1e-9;
    double tol_div = 1e-8;
    double tol_newton = 1e-10;
    double tol_energy = 1e-8;
    double tol_mass = 1e-12;
    int max_outer = 50;
    int max_newton = 50;
    int max_krylov = 400;
};

struct StepperOptions {
    SolverTolerances tol;
    /// Halve h for a failing step and retry, at most max_halvings times.
    bool fallback_halving = false;
    int max_halvings = 3;
    int smoothing_substeps = 1;
};

/// A step that could not be completed; carries the step index.
class StepFailure : public std::runtime_error {
public:
    StepFailure(int step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

class Stepper {
public:
    Stepper(const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
            const PotentialParams& pot, StepperOptions opts = {});

    /// State at t = 0 with φ₀^N = smooth(φ₀, h). Throws std::invalid_argument
    /// unless |φ₀| ≤ 1 and mean(φ₀) ∈ (−1,1).
    SimState initial_state(const CellField& phi0, const FaceField& v0, double h);

    /// One step of size h (with halving fallback if enabled). Throws
    /// StepFailure when the outer iteration fails.
    std::pair<SimState, StepReport> step(const SimState& state, double h);

    /// Called on every Picard iterate with the relative mass flux J̃.
    void set_flux_observer(std::function<void(const FaceField&)> observer) { flux_observer_ = std::move(observer); }

    const Grid& grid() const { return grid_; }
    const NonlocalForm& form() const { return *form_; }
    const FluidParams& fluid() const { return fp_; }
    const PotentialParams& potential() const { return pot_; }
    const StepperOptions& options() const { return opts_; }

    const PhaseSolver& phase_solver(double h, double reference_phase);
    const Smoother& smoother(double h);

private:
    Grid grid_;
    std::shared_ptr<const NonlocalForm> form_;
    FluidParams fp_;
    PotentialParams pot_;
    StepperOptions opts_;
    MomentumSolver momentum_;
    std::map<double, std::unique_ptr<PhaseSolver>> phase_cache_;
    std::map<double, std::unique_ptr<Smoother>> smoother_cache_;
    std::function<void(const FaceField&)> flux_observer_;

    std::pair<SimState, StepReport> attempt(const SimState& state, double h);
};

struct Trajectory {
    std::vector<StepReport> reports;
    std::vector<SimState> snapshots;
    SimState initial;
    SimState final_state;
};

struct RunOptions {
    double h = 1e-3;
    int n_steps = 0;
    /// Keep every n-th state (0 keeps only the initial and final states).
    int snapshot_every = 0;
};

/// Advances n_steps from (φ₀, v₀). Every StepReport is checked with
/// check_report; a violation throws StepFailure. on_step, if set, sees each
/// accepted state and report.
Trajectory run(Stepper& stepper, const CellField& phi0, const FaceField& v0, const RunOptions& ropts,
               const std::function<void(const SimState&, const StepReport&)>& on_step = {});

} // namespace nlch
