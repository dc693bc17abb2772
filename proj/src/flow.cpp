#include "nlch/flow.hpp"
#include "nlch/errors.hpp"
#include "nlch/krylov.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nlch {

double MaterialLaw::operator()(double s) const {
    if (kind == "constant") {
        return value1;
    }
    const double t = 0.5 * (std::clamp(s, -1.0, 1.0) + 1.0);
    return (1.0 - t) * value1 + t * value2;
}

double MaterialLaw::lower() const { return kind == "constant" ? value1 : std::min(value1, value2); }
double MaterialLaw::upper() const { return kind == "constant" ? value1 : std::max(value1, value2); }

void require_valid_law(const MaterialLaw& law, const char* what) {
    if (law.kind != "constant" && law.kind != "linear") {
        throw std::invalid_argument(std::string(what) + ": unknown law '" + law.kind + "'");
    }
    if (!(law.lower() > 0.0) || !std::isfinite(law.upper())) {
        throw std::invalid_argument(std::string(what) + ": law values must be positive and finite");
    }
}

void require_valid_fluid(const FluidParams& fp) {
    if (!(fp.rho1 > 0.0) || !(fp.rho2 > 0.0)) {
        throw std::invalid_argument("fluid: densities must be positive");
    }
    require_valid_law(fp.eta, "fluid.eta");
    require_valid_law(fp.mobility, "fluid.mobility");
}

double density_value(double phi, const FluidParams& fp) {
    return 0.5 * (fp.rho1 + fp.rho2) + 0.5 * (fp.rho2 - fp.rho1) * phi;
}

CellField density_of(const CellField& phi, const FluidParams& fp) {
    CellField rho(phi.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        if (!(std::abs(phi[i]) <= 1.0)) {
            throw std::invalid_argument("density_of: |phi| > 1 at cell " + std::to_string(i));
        }
        rho[i] = density_value(phi[i], fp);
    }
    return rho;
}

CellField eval_law(const MaterialLaw& law, const CellField& s) {
    CellField out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        out[i] = law(s[i]);
    }
    return out;
}

FaceField face_mobility(const Grid& grid, const CellField& phi_s, const FluidParams& fp) {
    const FaceField avg = face_average(grid, phi_s);
    FaceField m(avg.size());
    for (Eigen::Index f = 0; f < avg.size(); ++f) {
        m[f] = fp.mobility(avg[f]);
    }
    return m;
}

FaceField compute_flux(const CellField& mu, const CellField& phi_s, const FluidParams& fp, const Grid& grid) {
    require_cell_field(grid, mu, "compute_flux");
    require_cell_field(grid, phi_s, "compute_flux");
    const double prefactor = -0.5 * (fp.rho2 - fp.rho1);
    const FaceField grad = discrete_gradient(grid, mu);
    return prefactor * face_mobility(grid, phi_s, fp).cwiseProduct(grad);
}

SparseMatrix convection_matrix(const Grid& grid, const FaceField& a) {
    require_face_field(grid, a, "convection_matrix");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double hx = grid.hx();
    const double hy = grid.hy();
    const double scale = 0.5 / grid.cell_area();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * grid.num_faces());

    auto ax = [&](int i, int j) { return a[grid.xface(i, j)]; };
    auto ay = [&](int i, int j) { return a[grid.yface(i, j)]; };

    // x-momentum control volumes around interior x-faces.
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            const int f = grid.xface(i, j);
            if (i + 1 < nx) {
                t.emplace_back(f, grid.xface(i + 1, j), scale * hy * 0.5 * (ax(i, j) + ax(i + 1, j)));
            }
            if (i - 1 > 0) {
                t.emplace_back(f, grid.xface(i - 1, j), -scale * hy * 0.5 * (ax(i - 1, j) + ax(i, j)));
            }
            if (j + 1 < ny) {
                t.emplace_back(f, grid.xface(i, j + 1), scale * hx * 0.5 * (ay(i - 1, j + 1) + ay(i, j + 1)));
            }
            if (j - 1 >= 0) {
                t.emplace_back(f, grid.xface(i, j - 1), -scale * hx * 0.5 * (ay(i - 1, j) + ay(i, j)));
            }
        }
    }
    // y-momentum control volumes around interior y-faces.
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int f = grid.yface(i, j);
            if (j + 1 < ny) {
                t.emplace_back(f, grid.yface(i, j + 1), scale * hx * 0.5 * (ay(i, j) + ay(i, j + 1)));
            }
            if (j - 1 > 0) {
                t.emplace_back(f, grid.yface(i, j - 1), -scale * hx * 0.5 * (ay(i, j - 1) + ay(i, j)));
            }
            if (i + 1 < nx) {
                t.emplace_back(f, grid.yface(i + 1, j), scale * hy * 0.5 * (ax(i + 1, j - 1) + ax(i + 1, j)));
            }
            if (i - 1 >= 0) {
                t.emplace_back(f, grid.yface(i - 1, j), -scale * hy * 0.5 * (ax(i, j - 1) + ax(i, j)));
            }
        }
    }
    SparseMatrix c(grid.num_faces(), grid.num_faces());
    c.setFromTriplets(t.begin(), t.end());
    return c;
}

FaceField convection_apply(const CellField& rho_s, const FaceField& w, const FaceField& J, const FaceField& v,
                           const Grid& grid) {
    require_cell_field(grid, rho_s, "convection_apply");
    require_face_field(grid, w, "convection_apply");
    require_face_field(grid, J, "convection_apply");
    require_face_field(grid, v, "convection_apply");
    const FaceField a = face_average(grid, rho_s).cwiseProduct(w) + J;
    return convection_matrix(grid, a) * v;
}

SparseMatrix strain_matrix(const Grid& grid) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const int n = grid.num_cells();
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    std::vector<Eigen::Triplet<double>> t;

    auto add_x = [&](int row, int i, int j, double value) {
        if (i > 0 && i < nx) {
            t.emplace_back(row, grid.xface(i, j), value);
        }
    };
    auto add_y = [&](int row, int i, int j, double value) {
        if (j > 0 && j < ny) {
            t.emplace_back(row, grid.yface(i, j), value);
        }
    };

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = grid.cell(i, j);
            add_x(c, i + 1, j, ihx);
            add_x(c, i, j, -ihx);
            add_y(n + c, i, j + 1, ihy);
            add_y(n + c, i, j, -ihy);
        }
    }
    // D12 = ½(∂u/∂y + ∂v/∂x) at nodes; wall ghosts mirror the adjacent value with opposite sign.
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            const int row = 2 * n + grid.node(i, j);
            if (j == 0) {
                add_x(row, i, 0, 0.5 * 2.0 * ihy);
            } else if (j == ny) {
                add_x(row, i, ny - 1, -0.5 * 2.0 * ihy);
            } else {
                add_x(row, i, j, 0.5 * ihy);
                add_x(row, i, j - 1, -0.5 * ihy);
            }
            if (i == 0) {
                add_y(row, 0, j, 0.5 * 2.0 * ihx);
            } else if (i == nx) {
                add_y(row, nx - 1, j, -0.5 * 2.0 * ihx);
            } else {
                add_y(row, i, j, 0.5 * ihx);
                add_y(row, i - 1, j, -0.5 * ihx);
            }
        }
    }
    SparseMatrix s(2 * n + grid.num_nodes(), grid.num_faces());
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

namespace {

// Quadrature weights of |Dv|² entries times 2η: cells (D11, D22) and nodes (2·D12²).
Eigen::VectorXd strain_weights(const Grid& grid, const CellField& eta) {
    require_cell_field(grid, eta, "viscous");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const int n = grid.num_cells();
    const double area = grid.cell_area();
    Eigen::VectorXd w(2 * n + grid.num_nodes());
    for (int c = 0; c < n; ++c) {
        if (!(eta[c] > 0.0)) {
            throw std::invalid_argument("viscous: non-positive viscosity at cell " + std::to_string(c));
        }
        w[c] = 2.0 * area * eta[c];
        w[n + c] = 2.0 * area * eta[c];
    }
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            double sum = 0.0;
            int count = 0;
            for (int dj = -1; dj <= 0; ++dj) {
                for (int di = -1; di <= 0; ++di) {
                    const int ci = i + di;
                    const int cj = j + dj;
                    if (ci >= 0 && ci < nx && cj >= 0 && cj < ny) {
                        sum += eta[grid.cell(ci, cj)];
                        ++count;
                    }
                }
            }
            const double eta_node = sum / count;
            const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
            const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
            w[2 * n + grid.node(i, j)] = 4.0 * area * wx * wy * eta_node;
        }
    }
    return w;
}

} // namespace

SparseMatrix viscous_matrix(const Grid& grid, const CellField& eta) {
    const SparseMatrix s = strain_matrix(grid);
    const Eigen::VectorXd w = strain_weights(grid, eta);
    SparseMatrix weighted = w.asDiagonal() * s;
    SparseMatrix v = SparseMatrix(s.transpose()) * weighted;
    v *= 1.0 / grid.cell_area();
    return v;
}

double viscous_dissipation(const Grid& grid, const CellField& eta, const FaceField& v) {
    require_face_field(grid, v, "viscous_dissipation");
    const Eigen::VectorXd d = strain_matrix(grid) * v;
    const Eigen::VectorXd w = strain_weights(grid, eta);
    return (w.array() * d.array().square()).sum();
}

FaceField capillary_forcing(const Grid& grid, const CellField& phi_s, const CellField& mu) {
    require_cell_field(grid, phi_s, "capillary_forcing");
    return -face_average(grid, phi_s).cwiseProduct(discrete_gradient(grid, mu));
}

namespace {

void require_inputs(const Grid& grid, const MomentumInputs& in) {
    require_face_field(grid, in.v_k, "solve_momentum v_k");
    require_face_field(grid, in.w, "solve_momentum w");
    require_face_field(grid, in.J, "solve_momentum J");
    require_cell_field(grid, in.rho_k, "solve_momentum rho_k");
    require_cell_field(grid, in.rho_new, "solve_momentum rho_new");
    require_cell_field(grid, in.rho_s, "solve_momentum rho_s");
    require_cell_field(grid, in.eta_k, "solve_momentum eta_k");
    require_cell_field(grid, in.phi_s, "solve_momentum phi_s");
    require_cell_field(grid, in.mu, "solve_momentum mu");
    if (!(in.h > 0.0)) {
        throw std::invalid_argument("solve_momentum: h must be positive");
    }
}

FaceField momentum_rhs(const Grid& grid, const MomentumInputs& in) {
    FaceField rhs = face_average(grid, in.rho_k).cwiseProduct(in.v_k) / in.h + capillary_forcing(grid, in.phi_s, in.mu);
    zero_boundary_faces(grid, rhs);
    return rhs;
}

} // namespace

MomentumSolver::MomentumSolver(const Grid& grid)
    : grid_(grid), grad_(gradient_matrix(grid)), div_(divergence_matrix(grid)), strain_(strain_matrix(grid)) {
    const int n = grid.num_cells();
    Eigen::SparseMatrix<double> lap = -Eigen::SparseMatrix<double>(neumann_laplacian(grid));
    lap.coeffRef(0, 0) += 1.0; // pins the constant mode; exact for mean-zero right-hand sides
    auto factor = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(lap);
    if (factor->info() != Eigen::Success || n < 1) {
        throw std::runtime_error("MomentumSolver: pressure Laplacian factorization failed");
    }
    pressure_laplacian_ = std::move(factor);
}

SparseMatrix MomentumSolver::velocity_block(const MomentumInputs& in) const {
    const int nf = grid_.num_faces();
    const FaceField mass = (face_average(grid_, in.rho_new) + face_average(grid_, in.rho_k)) / (2.0 * in.h);
    const FaceField a = face_average(grid_, in.rho_s).cwiseProduct(in.w) + in.J;

    const Eigen::VectorXd w = strain_weights(grid_, in.eta_k);
    SparseMatrix weighted = w.asDiagonal() * strain_;
    SparseMatrix block = SparseMatrix(strain_.transpose()) * weighted;
    block *= 1.0 / grid_.cell_area();
    block += convection_matrix(grid_, a);

    SparseMatrix diag(nf, nf);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(nf);
    for (int f = 0; f < nf; ++f) {
        t.emplace_back(f, f, grid_.is_boundary_face(f) ? 1.0 : mass[f]);
    }
    diag.setFromTriplets(t.begin(), t.end());
    block += diag;
    return block;
}

FaceField MomentumSolver::residual(const MomentumInputs& in, const FlowState& state) const {
    require_inputs(grid_, in);
    const SparseMatrix block = velocity_block(in);
    FaceField r = block * state.v + grad_ * state.p - momentum_rhs(grid_, in);
    zero_boundary_faces(grid_, r);
    return r;
}

MomentumSolveResult MomentumSolver::solve(const MomentumInputs& in, const MomentumOptions& opts) const {
    require_inputs(grid_, in);
    const int n = grid_.num_cells();
    const Eigen::SparseMatrix<double> block(velocity_block(in));
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(block);
    lu.factorize(block);
    if (lu.info() != Eigen::Success) {
        throw std::runtime_error("solve_momentum: velocity block factorization failed");
    }
    const FaceField rhs = momentum_rhs(grid_, in);
    auto solve_velocity = [&](const FaceField& b) -> FaceField {
        FaceField x = lu.solve(b);
        zero_boundary_faces(grid_, x);
        return x;
    };

    const FaceField v_star = solve_velocity(rhs);
    // Schur complement: D A⁻¹ G p = D A⁻¹ f.
    auto schur = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
        return div_ * solve_velocity(grad_ * p);
    };
    const FaceField mass = (face_average(grid_, in.rho_new) + face_average(grid_, in.rho_k)) / (2.0 * in.h);
    const double mass_mean = mass.mean();
    const double eta_mean = in.eta_k.mean();
    auto precond = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
        const Eigen::VectorXd rz = project_mean_zero(r);
        Eigen::VectorXd x = -mass_mean * pressure_laplacian_->solve(rz) - 2.0 * eta_mean * rz;
        return project_mean_zero(x);
    };
    const Eigen::VectorXd b = div_ * v_star;

    MomentumSolveResult out;
    CellField p = CellField::Zero(n);
    if (b.lpNorm<Eigen::Infinity>() > 0.0) {
        // Target divergence far below tol_div so ⟨∇p, v⟩ stays at roundoff level.
        const double div_target = std::min(opts.tol_div, 1e-13 * std::max(1.0, v_star.lpNorm<Eigen::Infinity>()));
        const auto res = gmres(schur, b, precond, CellField::Zero(n), 0.0, div_target, opts.max_krylov);
        p = project_mean_zero(res.x);
        out.krylov_iterations = res.iterations;
    }
    FaceField v = solve_velocity(rhs - grad_ * p);
    out.flow = FlowState{v, p};
    out.divergence_inf = (div_ * v).lpNorm<Eigen::Infinity>();
    FaceField r = block * v + grad_ * p - rhs;
    zero_boundary_faces(grid_, r);
    out.momentum_residual = in.h * r.norm() / std::sqrt(double(grid_.num_faces()));
    if (out.divergence_inf > opts.tol_div) {
        throw ConvergenceError("solve_momentum: divergence constraint not met", out.divergence_inf);
    }
    if (out.momentum_residual > opts.tol_mom) {
        throw ConvergenceError("solve_momentum: momentum residual above tolerance", out.momentum_residual);
    }
    return out;
}

MomentumSolveResult solve_momentum(const MomentumInputs& in, const Grid& grid, const MomentumOptions& opts) {
    return MomentumSolver(grid).solve(in, opts);
}

double momentum_energy_defect(const Grid& grid, const MomentumInputs& in, const FaceField& v) {
    const FaceField rho_new_f = face_average(grid, in.rho_new);
    const FaceField rho_k_f = face_average(grid, in.rho_k);
    const double area = grid.cell_area();
    const double kinetic_change = 0.5 * area *
                                  ((rho_new_f.array() * v.array().square()).sum() -
                                   (rho_k_f.array() * in.v_k.array().square()).sum() +
                                   (rho_k_f.array() * (v - in.v_k).array().square()).sum());
    const double visc = in.h * viscous_dissipation(grid, in.eta_k, v);
    const double work = -in.h * face_inner(grid, capillary_forcing(grid, in.phi_s, in.mu), v);
    return kinetic_change + visc + work;
}

} // namespace nlch
