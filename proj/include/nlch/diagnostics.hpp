#pragma once

/// @file diagnostics.hpp
/// @brief Energy, dissipation and per-step invariant checks.

#include "nlch/flow.hpp"
#include "nlch/grid.hpp"
#include "nlch/nonlocal_form.hpp"
#include "nlch/potential.hpp"
#include "nlch/state.hpp"

#include <string>
#include <vector>

namespace nlch {

/// Energy parts at (φ, v). h_reg = 0 drops the gradient regularization.
/// Throws std::invalid_argument if some |φ_i| > 1.
EnergyComponents energy_components(const Grid& grid, const NonlocalForm& form, const FluidParams& fp,
                                   const PotentialParams& p, const CellField& phi, const FaceField& v,
                                   double h_reg = 0.0);

struct TotalEnergy {
    double E_kin = 0.0;
    double E_free = 0.0;
    double E_tot = 0.0;
};

TotalEnergy total_energy(const CellField& phi, const FaceField& v, const Grid& grid, const NonlocalForm& form,
                         const FluidParams& fp, const PotentialParams& p);

/// ∫2η|Dv|² + ∫m|∇μ|² with η on cells and m on faces.
double dissipation(const Grid& grid, const FaceField& v, const CellField& mu, const CellField& eta,
                   const FaceField& mobility);

/// All terms of the discrete energy estimate for the step (φ_k,v_k) → (φ,v).
EnergyBudget energy_budget(const Grid& grid, const NonlocalForm& form, const FluidParams& fp,
                           const PotentialParams& p, double h, const CellField& phi_k, const FaceField& v_k,
                           const CellField& phi, const FaceField& v, const CellField& mu, const CellField& phi_s);

struct ReportTolerances {
    double tol_energy = 1e-8;   // relative to the energy scale of the old state
    double tol_mass = 1e-12;
    double tol_residual = 1e-9;
};

struct CheckResult {
    bool ok = true;
    /// Any of "energy", "mass", "bounds", "residual".
    std::vector<std::string> failures;
};

/// Absolute slack tolerance: tol_energy times the sum of the magnitudes of the
/// components of E_h(φ_k,v_k), which equals |E_h| when no part is negative.
double energy_tolerance(const EnergyBudget& budget, double tol_energy);

CheckResult check_report(const StepReport& report, const ReportTolerances& tol = {});

} // namespace nlch
