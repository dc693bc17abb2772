#include "nlch/stepper.hpp"

#include "nlch/errors.hpp"

#include <cmath>
#include <limits>

namespace nlch {

Stepper::Stepper(const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
                 const PotentialParams& pot, StepperOptions opts)
    : grid_(grid), form_(std::move(form)), fp_(fp), pot_(pot), opts_(opts), momentum_(grid) {
    if (!form_ || form_->size() != grid_.num_cells()) {
        throw std::invalid_argument("Stepper: form does not match grid");
    }
    require_valid_fluid(fp_);
    require_valid_potential(pot_);
    if (opts_.smoothing_substeps < 1 || opts_.max_halvings < 0 || opts_.tol.max_outer < 1) {
        throw std::invalid_argument("Stepper: invalid options");
    }
}

const PhaseSolver& Stepper::phase_solver(double h, double reference_phase) {
    auto it = phase_cache_.find(h);
    if (it == phase_cache_.end()) {
        it = phase_cache_.emplace(h, std::make_unique<PhaseSolver>(grid_, form_, fp_, pot_, h, reference_phase))
                 .first;
    }
    return *it->second;
}

const Smoother& Stepper::smoother(double h) {
    auto it = smoother_cache_.find(h);
    if (it == smoother_cache_.end()) {
        it = smoother_cache_.emplace(h, std::make_unique<Smoother>(grid_, h, opts_.smoothing_substeps)).first;
    }
    return *it->second;
}

SimState Stepper::initial_state(const CellField& phi0, const FaceField& v0, double h) {
    require_cell_field(grid_, phi0, "initial phi");
    require_face_field(grid_, v0, "initial v");
    if (phi0.size() > 0 && phi0.cwiseAbs().maxCoeff() > 1.0) {
        throw std::invalid_argument("initial phi: |phi0| must not exceed 1");
    }
    if (!(std::abs(phi0.mean()) < 1.0)) {
        throw std::invalid_argument("initial phi: mean must lie in (-1,1)");
    }
    SimState s;
    s.phi = smoother(h).apply(phi0);
    if (s.phi.cwiseAbs().maxCoeff() >= 1.0) {
        throw std::invalid_argument("initial phi: smoothed data touches the pure phases");
    }
    s.flow.v = v0;
    s.flow.p = CellField::Zero(grid_.num_cells());
    s.rho = density_of(s.phi, fp_);
    s.phi_s = smoother(h).apply(s.phi);
    s.mu = phase_solver(h, s.phi.mean()).chemical_potential(s.phi, s.phi);
    return s;
}

std::pair<SimState, StepReport> Stepper::attempt(const SimState& state, double h) {
    const SolverTolerances& tol = opts_.tol;
    const int n = grid_.num_cells();
    const int nf = grid_.num_faces();
    const double dof_scale = std::sqrt(static_cast<double>(n + nf));

    const PhaseSolver& phase = phase_solver(h, state.phi.mean());
    const CellField& phi_k = state.phi;
    const CellField phi_s = smoother(h).apply(phi_k);
    const CellField rho_k = density_of(phi_k, fp_);
    const CellField rho_s = density_of(phi_s, fp_);
    const CellField eta_k = eval_law(fp_.eta, phi_k);

    PhaseOptions popts;
    popts.tol_newton = tol.tol_newton;
    popts.max_newton = tol.max_newton;
    popts.max_krylov = tol.max_krylov;
    MomentumOptions mopts;
    mopts.tol_mom = tol.tol_mom;
    mopts.tol_div = tol.tol_div;

    StepReport report;
    report.h = h;
    FaceField v_iter = state.flow.v;
    CellField p_iter = state.flow.p.size() == n ? state.flow.p : CellField::Zero(n);
    CellField phi_iter = phi_k;
    CellField mu_iter;
    double relax = 1.0;
    double previous = std::numeric_limits<double>::infinity();
    bool converged = false;

    MomentumInputs in;
    in.v_k = state.flow.v;
    in.rho_k = rho_k;
    in.rho_s = rho_s;
    in.eta_k = eta_k;
    in.phi_s = phi_s;
    in.h = h;

    for (int outer = 1; outer <= tol.max_outer; ++outer) {
        report.outer_iterations = outer;
        const PhaseSolveResult ph = phase.solve(phi_k, phi_s, v_iter, phi_iter, popts);
        report.newton_iterations += ph.newton_iterations;
        report.krylov_iterations += ph.krylov_iterations;

        in.J = compute_flux(ph.mu, phi_s, fp_, grid_);
        report.max_J = std::max(report.max_J, in.J.size() > 0 ? in.J.cwiseAbs().maxCoeff() : 0.0);
        if (flux_observer_) {
            flux_observer_(in.J);
        }
        in.rho_new = density_of(ph.phi, fp_);
        in.mu = ph.mu;
        in.w = v_iter;
        const MomentumSolveResult mom = momentum_.solve(in, mopts);
        report.krylov_iterations += mom.krylov_iterations;

        const FaceField v_new = relax * mom.flow.v + (1.0 - relax) * v_iter;
        const CellField p_new = relax * mom.flow.p + (1.0 - relax) * p_iter;

        in.w = v_new;
        const FaceField r_mom = h * momentum_.residual(in, {v_new, p_new});
        const CellField r_phase = phase.scaled_residual(phi_k, phi_s, v_new, ph.phi);
        const double res = std::sqrt(r_mom.squaredNorm() + r_phase.squaredNorm()) / dof_scale;

        v_iter = v_new;
        p_iter = p_new;
        phi_iter = ph.phi;
        mu_iter = ph.mu;
        report.coupled_residual = res;
        report.momentum_residual = r_mom.norm() / std::sqrt(static_cast<double>(nf));
        report.divergence_inf = (divergence_matrix(grid_) * v_new).cwiseAbs().maxCoeff();
        if (res <= tol.tol_couple) {
            converged = true;
            break;
        }
        if (res > previous) {
            relax = 0.5;
        }
        previous = res;
    }
    report.relaxation = relax;
    if (!converged) {
        throw ConvergenceError("outer iteration did not converge", report.coupled_residual);
    }

    SimState next;
    next.phi = phi_iter;
    next.mu = mu_iter;
    next.flow = {v_iter, p_iter};
    next.rho = density_of(next.phi, fp_);
    next.phi_s = phi_s;
    next.t = state.t + h;
    next.k = state.k + 1;

    report.step = next.k;
    report.t = next.t;
    report.budget = energy_budget(grid_, *form_, fp_, pot_, h, phi_k, state.flow.v, next.phi, next.flow.v,
                                  next.mu, phi_s);
    report.tol_energy = energy_tolerance(report.budget, tol.tol_energy);
    report.mass = next.phi.mean();
    report.mass_drift = report.mass - phi_k.mean();
    report.max_abs_phi = next.phi.cwiseAbs().maxCoeff();
    report.chempot_ratio = chempot_diagnostic(next.phi, phi_k, next.mu, grid_, pot_).ratio;
    return {std::move(next), std::move(report)};
}

std::pair<SimState, StepReport> Stepper::step(const SimState& state, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("step: h must be positive");
    }
    try {
        return attempt(state, h);
    } catch (const ConvergenceError& err) {
        if (!opts_.fallback_halving) {
            throw StepFailure(state.k + 1, err.what());
        }
    }
    for (int halvings = 1; halvings <= opts_.max_halvings; ++halvings) {
        const int pieces = 1 << halvings;
        const double hs = h / pieces;
        try {
            SimState current = state;
            StepReport total;
            for (int i = 0; i < pieces; ++i) {
                auto [next, rep] = attempt(current, hs);
                total.outer_iterations += rep.outer_iterations;
                total.newton_iterations += rep.newton_iterations;
                total.krylov_iterations += rep.krylov_iterations;
                total.max_J = std::max(total.max_J, rep.max_J);
                total.coupled_residual = rep.coupled_residual;
                total.momentum_residual = rep.momentum_residual;
                total.divergence_inf = rep.divergence_inf;
                total.relaxation = std::min(total.relaxation, rep.relaxation);
                total.chempot_ratio = rep.chempot_ratio;
                // The worst sub-step budget stands for the whole step.
                if (i == 0 || rep.budget.slack - rep.tol_energy < total.budget.slack - total.tol_energy) {
                    total.budget = rep.budget;
                    total.tol_energy = rep.tol_energy;
                }
                current = std::move(next);
            }
            total.h = h;
            total.h_reductions = halvings;
            total.step = state.k + 1;
            current.k = state.k + 1;
            current.t = state.t + h;
            total.t = current.t;
            total.mass = current.phi.mean();
            total.mass_drift = total.mass - state.phi.mean();
            total.max_abs_phi = current.phi.cwiseAbs().maxCoeff();
            return {std::move(current), std::move(total)};
        } catch (const ConvergenceError&) {
        }
    }
    throw StepFailure(state.k + 1, "outer iteration failed after step-size halving");
}

Trajectory run(Stepper& stepper, const CellField& phi0, const FaceField& v0, const RunOptions& ropts,
               const std::function<void(const SimState&, const StepReport&)>& on_step) {
    if (ropts.n_steps < 0 || ropts.snapshot_every < 0) {
        throw std::invalid_argument("run: n_steps and snapshot cadence must be non-negative");
    }
    Trajectory traj;
    traj.initial = stepper.initial_state(phi0, v0, ropts.h);
    traj.snapshots.push_back(traj.initial);
    SimState current = traj.initial;
    ReportTolerances rtol;
    rtol.tol_energy = stepper.options().tol.tol_energy;
    rtol.tol_mass = stepper.options().tol.tol_mass;
    rtol.tol_residual = stepper.options().tol.tol_couple;
    for (int k = 0; k < ropts.n_steps; ++k) {
        auto [next, report] = stepper.step(current, ropts.h);
        const CheckResult check = check_report(report, rtol);
        if (!check.ok) {
            throw StepFailure(report.step, "invariant violated: " + check.failures.front());
        }
        if (on_step) {
            on_step(next, report);
        }
        traj.reports.push_back(report);
        current = std::move(next);
        const bool last = k + 1 == ropts.n_steps;
        if (!last && ropts.snapshot_every > 0 && current.k % ropts.snapshot_every == 0) {
            traj.snapshots.push_back(current);
        }
    }
    if (ropts.n_steps > 0) {
        traj.snapshots.push_back(current);
    }
    traj.final_state = std::move(current);
    return traj;
}

} // namespace nlch
