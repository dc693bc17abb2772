#include "nlch/phase.hpp"

#include "nlch/errors.hpp"
#include "nlch/krylov.hpp"

#include <cmath>
#include <stdexcept>

namespace nlch {

namespace {

constexpr double kDivergenceGuard = 1e-6;

} // namespace

PhaseSolver::PhaseSolver(const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
                         const PotentialParams& pot, double h, double reference_phase)
    : grid_(grid), form_(std::move(form)), fp_(fp), pot_(pot), h_(h) {
    if (!form_ || form_->size() != grid_.num_cells()) {
        throw std::invalid_argument("PhaseSolver: form does not match grid");
    }
    if (!(h_ > 0.0)) {
        throw std::invalid_argument("PhaseSolver: h must be positive");
    }
    require_valid_potential(pot_);
    require_valid_fluid(fp_);
    if (!(std::abs(reference_phase) < 1.0)) {
        reference_phase = 0.0;
    }
    lap_ = neumann_laplacian(grid_);
    grad_ = gradient_matrix(grid_);
    div_ = divergence_matrix(grid_);
    m_ref_ = fp_.mobility(reference_phase);
    gamma_ = d2psi0(reference_phase, pot_) - 0.5 * pot_.kappa;

    const int n = grid_.num_cells();
    const double inv_area = 1.0 / grid_.cell_area();
    const SparseMatrix b_ref = (-m_ref_) * lap_;
    SparseMatrix local(n, n);
    local.setIdentity();
    local = gamma_ * local - h_ * lap_;
    const SparseMatrix b_local = b_ref * local;

    Eigen::MatrixXd p = (b_ref * form_->matrix()) * inv_area;
    for (int r = 0; r < b_local.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(b_local, r); it; ++it) {
            p(it.row(), it.col()) += it.value();
        }
    }
    p.diagonal().array() += 1.0 / h_;
    precond_ = std::make_shared<const Eigen::PartialPivLU<Eigen::MatrixXd>>(p);
}

CellField PhaseSolver::mobility_operator(const FaceField& mob, const CellField& x) const {
    const FaceField flux = mob.cwiseProduct(grad_ * x);
    return -(div_ * flux);
}

CellField PhaseSolver::chemical_potential(const CellField& phi, const CellField& phi_k) const {
    const int n = grid_.num_cells();
    CellField mu = form_->multiply(phi) / grid_.cell_area() - h_ * (lap_ * phi);
    for (int i = 0; i < n; ++i) {
        mu[i] += dpsi0(phi[i], pot_) - 0.5 * pot_.kappa * (phi[i] + phi_k[i]);
    }
    return mu;
}

CellField PhaseSolver::scaled_residual(const CellField& phi_k, const CellField& phi_s, const FaceField& v,
                                       const CellField& phi) const {
    const FaceField mob = face_mobility(grid_, phi_s, fp_);
    const FaceField transport = face_average(grid_, phi_s).cwiseProduct(v);
    const CellField mu = chemical_potential(phi, phi_k);
    return (phi - phi_k) + h_ * (div_ * transport) + h_ * mobility_operator(mob, mu);
}

PhaseSolveResult PhaseSolver::solve(const CellField& phi_k, const CellField& phi_s, const FaceField& v,
                                    const CellField& phi_guess, const PhaseOptions& opts) const {
    require_cell_field(grid_, phi_k, "phase_subsolve");
    require_cell_field(grid_, phi_s, "phase_subsolve");
    require_cell_field(grid_, phi_guess, "phase_subsolve");
    require_face_field(grid_, v, "phase_subsolve");
    const int n = grid_.num_cells();
    for (int f = 0; f < grid_.num_faces(); ++f) {
        if (grid_.is_boundary_face(f) && v[f] != 0.0) {
            throw std::invalid_argument("phase_subsolve: velocity must vanish on boundary faces");
        }
    }
    const double vmax = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
    if ((div_ * v).cwiseAbs().maxCoeff() > kDivergenceGuard * std::max(1.0, vmax)) {
        throw std::invalid_argument("phase_subsolve: velocity is not discretely divergence-free");
    }
    const double bound = 1.0 - pot_.clamp_eps;
    const double mean_k = phi_k.mean();
    if (!(std::abs(mean_k) < 1.0)) {
        throw std::invalid_argument("phase_subsolve: mean(phi_k) must lie in (-1,1)");
    }

    PhaseSolveResult out;
    out.phi = phi_guess.array() + (mean_k - phi_guess.mean());
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(out.phi[i]) < bound)) {
            out.phi = phi_k;
            break;
        }
    }

    const FaceField mob = face_mobility(grid_, phi_s, fp_);
    const bool constant_mobility = (mob.array() == m_ref_).all();
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    CellField r = scaled_residual(phi_k, phi_s, v, out.phi);
    double rnorm = r.norm() / sqrt_n;

    while (rnorm > opts.tol_newton) {
        if (out.newton_iterations >= opts.max_newton) {
            throw ConvergenceError("phase_subsolve: Newton did not converge", rnorm);
        }
        ++out.newton_iterations;
        CellField shift(n);
        for (int i = 0; i < n; ++i) {
            shift[i] = d2psi0(out.phi[i], pot_) - 0.5 * pot_.kappa - gamma_;
        }
        // Jacobian of h·R is hJ with J = I/h + B(K/area + Ψ₀″ − κ/2 − hΔ).
        // GMRES runs on J P⁻¹ y = −R, where J − P = B diag(shift) + (B − B_ref)(...).
        auto applied = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
            const Eigen::VectorXd z = precond_->solve(y);
            Eigen::VectorXd out_y = y + mobility_operator(mob, shift.cwiseProduct(z));
            if (!constant_mobility) {
                const Eigen::VectorXd jz = form_->multiply(z) / grid_.cell_area() +
                                           gamma_ * z - h_ * (lap_ * z);
                out_y += mobility_operator(mob, jz) + m_ref_ * (lap_ * jz);
            }
            return out_y;
        };
        auto identity = [](const Eigen::VectorXd& y) -> Eigen::VectorXd { return y; };
        const Eigen::VectorXd rhs = -r / h_;
        const double abs_target = 0.1 * opts.tol_newton * sqrt_n / h_;
        const KrylovResult lin =
            gmres(applied, rhs, identity, Eigen::VectorXd::Zero(n), 1e-9, abs_target, opts.max_krylov);
        out.krylov_iterations += lin.iterations;
        const CellField delta = project_mean_zero(precond_->solve(lin.x));

        double step = 1.0;
        for (int i = 0; i < n; ++i) {
            const double target = out.phi[i] + delta[i];
            if (target > bound) {
                step = std::min(step, (bound - out.phi[i]) / delta[i]);
            } else if (target < -bound) {
                step = std::min(step, (-bound - out.phi[i]) / delta[i]);
            }
        }
        CellField trial;
        CellField trial_r;
        double trial_norm = 0.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
            trial = out.phi + step * delta;
            trial_r = scaled_residual(phi_k, phi_s, v, trial);
            trial_norm = trial_r.norm() / sqrt_n;
            if (trial_norm < rnorm) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            throw ConvergenceError("phase_subsolve: line search stalled", rnorm);
        }
        out.phi = std::move(trial);
        r = std::move(trial_r);
        rnorm = trial_norm;
    }
    out.residual = rnorm;
    out.mu = chemical_potential(out.phi, phi_k);
    return out;
}

PhaseSolveResult phase_subsolve(const CellField& phi_k, const CellField& phi_s, const FaceField& v, double h,
                                const Grid& grid, std::shared_ptr<const NonlocalForm> form, const FluidParams& fp,
                                const PotentialParams& p, const PhaseOptions& opts) {
    require_cell_field(grid, phi_k, "phase_subsolve");
    const PhaseSolver solver(grid, std::move(form), fp, p, h, phi_k.mean());
    return solver.solve(phi_k, phi_s, v, phi_k, opts);
}

} // namespace nlch
