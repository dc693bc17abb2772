#pragma once

/// @file potential.hpp
/// @brief Logarithmic free energy
///   Ψ(s) = (ϑ/2)[(1+s)ln(1+s) + (1−s)ln(1−s)] − (ϑ_c/2)s²
/// with convex part Ψ₀ = Ψ + κs²/2, and the resolvent of I + ∂F_h.

#include "nlch/grid.hpp"
#include "nlch/nonlocal_form.hpp"

namespace nlch {

struct PotentialParams {
    double theta = 1.0;
    double theta_c = 2.0;
    double kappa = 2.0;
    /// Newton iterates are kept inside [−1+clamp_eps, 1−clamp_eps].
    double clamp_eps = 1e-9;
};

/// Throws std::invalid_argument unless 0 < ϑ < ϑ_c, κ ≥ ϑ_c − ϑ and
/// clamp_eps ∈ (0, 1e-6].
void require_valid_potential(const PotentialParams& p);

struct PotentialValues {
    double psi = 0.0;
    double dpsi = 0.0;
    double psi0 = 0.0;
    double dpsi0 = 0.0;
    double d2psi0 = 0.0;
};

/// Requires |s| < 1; throws std::domain_error otherwise.
PotentialValues psi_eval(double s, const PotentialParams& p);

/// Ψ on the closed interval [−1,1] (finite limits at ±1). Throws for |s| > 1.
double psi_value(double s, const PotentialParams& p);
double psi0_value(double s, const PotentialParams& p);
double dpsi0(double s, const PotentialParams& p);
double d2psi0(double s, const PotentialParams& p);

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

struct ResolventResult {
    CellField u;
    double residual = 0.0;
    int iterations = 0;
};

/// Solves u + (1/area)K u − h_reg Δ_N u + P₀Ψ₀′(u) = f with mean(u) = mean(f)
/// by damped Newton on the mean-zero subspace. Throws std::invalid_argument
/// when mean(f) ∉ (−1,1) and std::runtime_error on non-convergence.
ResolventResult resolvent(const CellField& f, double h_reg, const Grid& grid, const NonlocalForm& form,
                          const PotentialParams& p, const NewtonOptions& opts = {});

struct ChemPotDiagnostic {
    double psi0_prime_l2 = 0.0;
    double mu_integral = 0.0; // |∫μ|
    double grad_mu_l2 = 0.0;
    double grad_phi_l2 = 0.0;
    /// (‖Ψ₀′(φ)‖ + |∫μ|) / (‖∇μ‖ + ‖∇φ‖² + 1)
    double ratio = 0.0;
};

/// Throws std::invalid_argument when the means of phi and phi_k differ or
/// leave (−1,1).
ChemPotDiagnostic chempot_diagnostic(const CellField& phi, const CellField& phi_k, const CellField& mu,
                                     const Grid& grid, const PotentialParams& p);

} // namespace nlch
