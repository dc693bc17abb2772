#pragma once

/// @file state.hpp
/// @brief Simulation state at one time level and the per-step report.

#include "nlch/flow.hpp"
#include "nlch/grid.hpp"

namespace nlch {

struct SimState {
    CellField phi;
    CellField mu;
    FlowState flow;
    CellField rho;
    CellField phi_s;
    double t = 0.0;
    int k = 0;
};

/// Energy functional split into its parts. total_h() adds the (h/2)‖∇φ‖²
/// regularization that the discrete estimate is stated for.
struct EnergyComponents {
    double kinetic = 0.0;      // ∫ρ|v|²/2
    double psi_integral = 0.0; // ∫Ψ(φ)
    double nonlocal = 0.0;     // ½E(φ,φ)
    double gradient_reg = 0.0; // (h/2)‖∇φ‖²

    double free() const { return psi_integral + nonlocal; }
    double total() const { return kinetic + free(); }
    double total_h() const { return total() + gradient_reg; }
};

/// Every term of the discrete energy estimate
///   E_h(φ,v) + ∫ρ_k|v−v_k|²/2 + (h/2)‖∇(φ−φ_k)‖² + ½E(φ−φ_k) + h∫2η_k|Dv|² + h∫m|∇μ|² ≤ E_h(φ_k,v_k).
struct EnergyBudget {
    EnergyComponents before;
    EnergyComponents after;
    double kinetic_increment = 0.0;  // ∫ρ_k|v−v_k|²/2
    double gradient_increment = 0.0; // (h/2)‖∇(φ−φ_k)‖²
    double nonlocal_increment = 0.0; // ½E(φ−φ_k,φ−φ_k)
    double viscous = 0.0;            // ∫2η_k|Dv|²
    double mixing = 0.0;             // ∫m(φ_s)|∇μ|²
    double h = 0.0;
    /// before.total_h() − [after.total_h() + increments + h·(viscous + mixing)].
    double slack = 0.0;
};

struct StepReport {
    int step = 0;
    double t = 0.0;
    double h = 0.0;
    int h_reductions = 0;
    int outer_iterations = 0;
    int newton_iterations = 0;
    int krylov_iterations = 0;
    double coupled_residual = 0.0;
    double relaxation = 1.0;
    double momentum_residual = 0.0;
    double divergence_inf = 0.0;
    double max_J = 0.0; // max over Picard iterates of ‖J̃‖∞

    EnergyBudget budget;
    double tol_energy = 0.0; // absolute tolerance applied to the slack
    double mass = 0.0;       // mean(φ)
    double mass_drift = 0.0; // mean(φ) − mean(φ_k)
    double max_abs_phi = 0.0;
    double chempot_ratio = 0.0;

    double dissipation() const { return budget.viscous + budget.mixing; }
};

} // namespace nlch
