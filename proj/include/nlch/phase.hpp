#pragma once

/// @file phase.hpp
/// @brief The (φ, μ) subsystem of one time step:
///   (φ−φ_k)/h + div(φ_s v) = div(m(φ_s)∇μ),
///   μ + κ(φ+φ_k)/2 = (1/area)Kφ + Ψ₀′(φ) − hΔ_Nφ.
/// μ is eliminated cellwise and Newton runs on φ alone.

#include "nlch/flow.hpp"
#include "nlch/grid.hpp"
#include "nlch/nonlocal_form.hpp"
#include "nlch/potential.hpp"

#include <memory>

namespace nlch {

struct PhaseOptions {
    double tol_newton = 1e-10; // on ‖h·R‖₂/√N
    int max_newton = 50;
    int max_krylov = 400;
};

struct PhaseSolveResult {
    CellField phi;
    CellField mu;
    double residual = 0.0; // ‖h·R(φ)‖₂/√N
    int newton_iterations = 0;
    int krylov_iterations = 0;
};

/// Newton solver for the phase subsystem at a fixed step size h. The
/// constructor factorizes a dense preconditioner
///   P = I/h + B_ref((1/area)K + γI − hΔ_N),   B_ref = −m_ref Δ_N,
/// which is reused for every solve at this h.
class PhaseSolver {
public:
    PhaseSolver(const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
                const PotentialParams& pot, double h, double reference_phase = 0.0);

    /// phi_guess must be interior with mean(phi_k); pass phi_k when no better
    /// guess exists. Throws ConvergenceError on Newton failure and
    /// std::invalid_argument for a velocity with nonzero boundary faces or
    /// divergence.
    PhaseSolveResult solve(const CellField& phi_k, const CellField& phi_s, const FaceField& v,
                           const CellField& phi_guess, const PhaseOptions& opts = {}) const;

    /// μ(φ) from the chemical-potential relation.
    CellField chemical_potential(const CellField& phi, const CellField& phi_k) const;

    /// h·R(φ) of the transport–diffusion equation with μ = μ(φ).
    CellField scaled_residual(const CellField& phi_k, const CellField& phi_s, const FaceField& v,
                              const CellField& phi) const;

    double h() const { return h_; }

private:
    Grid grid_;
    std::shared_ptr<const NonlocalForm> form_;
    FluidParams fp_;
    PotentialParams pot_;
    double h_;
    SparseMatrix lap_;
    SparseMatrix grad_;
    SparseMatrix div_;
    double m_ref_;
    double gamma_;
    std::shared_ptr<const Eigen::PartialPivLU<Eigen::MatrixXd>> precond_;

    CellField mobility_operator(const FaceField& mob, const CellField& x) const;
};

/// One-shot convenience wrapper: builds a PhaseSolver and solves from phi_k.
PhaseSolveResult phase_subsolve(const CellField& phi_k, const CellField& phi_s, const FaceField& v, double h,
                                const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
                                const PotentialParams& p, const PhaseOptions& opts = {});

} // namespace nlch
