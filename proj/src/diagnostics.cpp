#include "nlch/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace nlch {

EnergyComponents energy_components(const Grid& grid, const NonlocalForm& form, const FluidParams& fp,
                                   const PotentialParams& p, const CellField& phi, const FaceField& v,
                                   double h_reg) {
    require_cell_field(grid, phi, "energy");
    require_face_field(grid, v, "energy");
    const double area = grid.cell_area();
    const FaceField rho_f = face_average(grid, density_of(phi, fp));

    EnergyComponents e;
    e.kinetic = 0.5 * area * (rho_f.array() * v.array().square()).sum();
    double psi = 0.0;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        psi += psi_value(phi[i], p);
    }
    e.psi_integral = area * psi;
    e.nonlocal = 0.5 * apply_bilinear(form, phi, phi);
    if (h_reg > 0.0) {
        const FaceField g = discrete_gradient(grid, phi);
        e.gradient_reg = 0.5 * h_reg * face_inner(grid, g, g);
    }
    return e;
}

TotalEnergy total_energy(const CellField& phi, const FaceField& v, const Grid& grid, const NonlocalForm& form,
                         const FluidParams& fp, const PotentialParams& p) {
    const EnergyComponents e = energy_components(grid, form, fp, p, phi, v);
    return {e.kinetic, e.free(), e.total()};
}

double dissipation(const Grid& grid, const FaceField& v, const CellField& mu, const CellField& eta,
                   const FaceField& mobility) {
    require_face_field(grid, mobility, "dissipation");
    const FaceField g = discrete_gradient(grid, mu);
    return viscous_dissipation(grid, eta, v) +
           grid.cell_area() * (mobility.array() * g.array().square()).sum();
}

EnergyBudget energy_budget(const Grid& grid, const NonlocalForm& form, const FluidParams& fp,
                           const PotentialParams& p, double h, const CellField& phi_k, const FaceField& v_k,
                           const CellField& phi, const FaceField& v, const CellField& mu, const CellField& phi_s) {
    const double area = grid.cell_area();
    EnergyBudget b;
    b.h = h;
    b.before = energy_components(grid, form, fp, p, phi_k, v_k, h);
    b.after = energy_components(grid, form, fp, p, phi, v, h);

    const FaceField rho_kf = face_average(grid, density_of(phi_k, fp));
    const FaceField dv = v - v_k;
    b.kinetic_increment = 0.5 * area * (rho_kf.array() * dv.array().square()).sum();
    const CellField dphi = phi - phi_k;
    const FaceField gd = discrete_gradient(grid, dphi);
    b.gradient_increment = 0.5 * h * face_inner(grid, gd, gd);
    b.nonlocal_increment = 0.5 * apply_bilinear(form, dphi, dphi);

    b.viscous = viscous_dissipation(grid, eval_law(fp.eta, phi_k), v);
    const FaceField gmu = discrete_gradient(grid, mu);
    const FaceField mob = face_mobility(grid, phi_s, fp);
    b.mixing = area * (mob.array() * gmu.array().square()).sum();

    b.slack = b.before.total_h() - (b.after.total_h() + b.kinetic_increment + b.gradient_increment +
                                    b.nonlocal_increment + h * (b.viscous + b.mixing));
    return b;
}

double energy_tolerance(const EnergyBudget& budget, double tol_energy) {
    const EnergyComponents& e = budget.before;
    const double scale = std::abs(e.kinetic) + std::abs(e.psi_integral) + std::abs(e.nonlocal) +
                         std::abs(e.gradient_reg);
    return tol_energy * scale;
}

CheckResult check_report(const StepReport& report, const ReportTolerances& tol) {
    CheckResult out;
    auto fail = [&](const char* what) {
        out.ok = false;
        out.failures.emplace_back(what);
    };
    if (!(report.budget.slack >= -energy_tolerance(report.budget, tol.tol_energy))) {
        fail("energy");
    }
    if (!(std::abs(report.mass_drift) <= tol.tol_mass)) {
        fail("mass");
    }
    if (!(report.max_abs_phi < 1.0)) {
        fail("bounds");
    }
    if (!(report.coupled_residual <= tol.tol_residual)) {
        fail("residual");
    }
    return out;
}

} // namespace nlch
