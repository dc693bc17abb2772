#pragma once

/// @file flow.hpp
/// @brief Variable-density momentum balance on the MAC grid: density law,
/// relative mass flux J̃, skew-symmetric convection, symmetric-gradient
/// viscous form and the divergence-constrained velocity solve.

#include "nlch/grid.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <string>

namespace nlch {

/// Bounded positive coefficient law s ↦ value. "constant" returns value1;
/// "linear" interpolates value1 at s = −1 to value2 at s = +1 (s clipped to [−1,1]).
struct MaterialLaw {
    std::string kind = "constant";
    double value1 = 1.0;
    double value2 = 1.0;

    double operator()(double s) const;
    double lower() const;
    double upper() const;
};

/// Throws std::invalid_argument for unknown kinds or non-positive values.
void require_valid_law(const MaterialLaw& law, const char* what);

struct FluidParams {
    double rho1 = 1.0;
    double rho2 = 1.0;
    MaterialLaw eta;
    MaterialLaw mobility;
};

void require_valid_fluid(const FluidParams& fp);

struct FlowState {
    FaceField v;
    CellField p;
};

/// ρ(φ) = ½(ρ̃₁+ρ̃₂) + ½(ρ̃₂−ρ̃₁)φ.
double density_value(double phi, const FluidParams& fp);
/// Pointwise density; throws std::invalid_argument if some |φ_i| > 1.
CellField density_of(const CellField& phi, const FluidParams& fp);

/// Law evaluated on each cell.
CellField eval_law(const MaterialLaw& law, const CellField& s);
/// m(face average of phi_s), boundary faces included.
FaceField face_mobility(const Grid& grid, const CellField& phi_s, const FluidParams& fp);

/// J̃ = −((ρ̃₂−ρ̃₁)/2)·m(φ_s)·∇μ on faces, zero on boundary faces.
FaceField compute_flux(const CellField& mu, const CellField& phi_s, const FluidParams& fp, const Grid& grid);

/// Skew part ½(T(a) − T(a)ᵀ) of the centered flux-form transport operator for
/// the face mass flux a. Rows and columns of boundary faces are empty.
SparseMatrix convection_matrix(const Grid& grid, const FaceField& mass_flux);

/// C(w,J)v with mass flux a = face_average(ρ_s)·w + J; ⟨C v, v⟩ = 0 exactly.
FaceField convection_apply(const CellField& rho_s, const FaceField& w, const FaceField& J, const FaceField& v,
                           const Grid& grid);

/// Discrete strain rows: D11 and D22 at cell centers, D12 at nodes (ghost
/// reflection at no-slip walls). Columns of boundary faces are empty.
SparseMatrix strain_matrix(const Grid& grid);

/// Strong-form viscous operator −div(2η Dv) (symmetric positive semidefinite
/// in the face inner product). eta is given on cells.
SparseMatrix viscous_matrix(const Grid& grid, const CellField& eta);

/// ∫2η|Dv|² with the quadrature underlying viscous_matrix.
double viscous_dissipation(const Grid& grid, const CellField& eta, const FaceField& v);

/// −φ_s∇μ on faces (face-averaged φ_s).
FaceField capillary_forcing(const Grid& grid, const CellField& phi_s, const CellField& mu);

struct MomentumInputs {
    FaceField v_k;
    CellField rho_k;
    CellField rho_new;
    CellField rho_s;
    CellField eta_k;
    FaceField J;
    CellField phi_s;
    CellField mu;
    /// Transporting velocity of the convection term.
    FaceField w;
    double h = 0.0;
};

struct MomentumOptions {
    double tol_mom = 1e-9;
    double tol_div = 1e-8;
    int max_krylov = 300;
};

struct MomentumSolveResult {
    FlowState flow;
    /// h·‖r‖₂/√(#faces) of the momentum equation, in velocity units.
    double momentum_residual = 0.0;
    double divergence_inf = 0.0;
    int krylov_iterations = 0;
};

/// Solves
///   ((ρ+ρ_k)/2h) v − ρ_k v_k/h + C(w,J)v − div(2η_k Dv) + ∇p = −φ_s∇μ,  div v = 0,
/// where the ((ρ+ρ_k)/2h) coefficient folds the −((ρ−ρ_k)/2h)v correction of
/// the skew form into the mass term. The pressure Schur complement is solved
/// by right-preconditioned GMRES (Cahouet–Chabard preconditioner) around a
/// sparse LU of the velocity block. Pressure is returned with zero mean.
class MomentumSolver {
public:
    explicit MomentumSolver(const Grid& grid);

    MomentumSolveResult solve(const MomentumInputs& in, const MomentumOptions& opts = {}) const;

    /// Strong-form momentum residual (zero on boundary faces) for a given state.
    FaceField residual(const MomentumInputs& in, const FlowState& state) const;

    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
    SparseMatrix grad_;
    SparseMatrix div_;
    SparseMatrix strain_;
    std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> pressure_laplacian_;

    SparseMatrix velocity_block(const MomentumInputs& in) const;
};

MomentumSolveResult solve_momentum(const MomentumInputs& in, const Grid& grid, const MomentumOptions& opts = {});

/// Momentum equation tested with v: [⟨ρ,|v|²⟩ − ⟨ρ_k,|v_k|²⟩ + ⟨ρ_k,|v−v_k|²⟩]/2 + h∫2η_k|Dv|²
/// + h⟨φ_s∇μ, v⟩, which vanishes for an exact solve.
double momentum_energy_defect(const Grid& grid, const MomentumInputs& in, const FaceField& v);

} // namespace nlch
