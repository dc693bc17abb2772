#include "nlch/potential.hpp"
#include "nlch/krylov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nlch {

void require_valid_potential(const PotentialParams& p) {
    if (!(p.theta > 0.0) || !(p.theta < p.theta_c)) {
        throw std::invalid_argument("potential: require theta < theta_c");
    }
    if (!(p.kappa >= p.theta_c - p.theta)) {
        throw std::invalid_argument("potential: require kappa >= theta_c - theta");
    }
    if (!(p.clamp_eps > 0.0 && p.clamp_eps <= 1e-6)) {
        throw std::invalid_argument("potential: clamp_eps must lie in (0, 1e-6]");
    }
}

namespace {

// (1+s)ln(1+s) + (1−s)ln(1−s), continuous on [−1,1].
double entropy_part(double s) {
    const double a = 1.0 + s;
    const double b = 1.0 - s;
    const double ta = a > 0.0 ? a * std::log1p(s) : 0.0;
    const double tb = b > 0.0 ? b * std::log1p(-s) : 0.0;
    return ta + tb;
}

void require_open_interval(double s) {
    if (!(std::abs(s) < 1.0)) {
        throw std::domain_error("potential: |s| must be < 1, got " + std::to_string(s));
    }
}

} // namespace

double psi_value(double s, const PotentialParams& p) {
    if (!(std::abs(s) <= 1.0)) {
        throw std::domain_error("potential: |s| must be <= 1, got " + std::to_string(s));
    }
    return 0.5 * p.theta * entropy_part(s) - 0.5 * p.theta_c * s * s;
}

double psi0_value(double s, const PotentialParams& p) { return psi_value(s, p) + 0.5 * p.kappa * s * s; }

double dpsi0(double s, const PotentialParams& p) {
    require_open_interval(s);
    return 0.5 * p.theta * (std::log1p(s) - std::log1p(-s)) + (p.kappa - p.theta_c) * s;
}

double d2psi0(double s, const PotentialParams& p) {
    require_open_interval(s);
    return p.theta / ((1.0 - s) * (1.0 + s)) + (p.kappa - p.theta_c);
}

PotentialValues psi_eval(double s, const PotentialParams& p) {
    require_open_interval(s);
    PotentialValues v;
    v.psi = psi_value(s, p);
    v.psi0 = v.psi + 0.5 * p.kappa * s * s;
    v.dpsi0 = dpsi0(s, p);
    v.dpsi = v.dpsi0 - p.kappa * s;
    v.d2psi0 = d2psi0(s, p);
    return v;
}

ResolventResult resolvent(const CellField& f, double h_reg, const Grid& grid, const NonlocalForm& form,
                          const PotentialParams& p, const NewtonOptions& opts) {
    require_cell_field(grid, f, "resolvent");
    if (form.size() != grid.num_cells()) {
        throw std::invalid_argument("resolvent: form does not match grid");
    }
    if (!(h_reg > 0.0)) {
        throw std::invalid_argument("resolvent: h_reg must be positive");
    }
    const double m = f.mean();
    if (!(std::abs(m) < 1.0)) {
        throw std::invalid_argument("resolvent: mean(f) must lie in (-1,1)");
    }
    const int n = grid.num_cells();
    const double inv_area = 1.0 / grid.cell_area();
    const SparseMatrix lap = neumann_laplacian(grid);
    const double bound = 1.0 - p.clamp_eps;

    auto residual = [&](const CellField& u) -> CellField {
        CellField d(n);
        for (int i = 0; i < n; ++i) {
            d[i] = dpsi0(u[i], p);
        }
        CellField r = u - f + form.multiply(u) * inv_area - h_reg * (lap * u) + project_mean_zero(d);
        return r;
    };

    ResolventResult out;
    out.u = CellField::Constant(n, m);
    CellField r = residual(out.u);
    double rnorm = r.norm();
    const Eigen::VectorXd base_diag = Eigen::VectorXd::Ones(n) + form.matrix().diagonal() * inv_area -
                                      h_reg * lap.diagonal();

    while (rnorm > opts.tol) {
        if (out.iterations >= opts.max_iter) {
            throw std::runtime_error("resolvent: Newton did not converge, residual " + std::to_string(rnorm));
        }
        ++out.iterations;
        CellField curv(n);
        for (int i = 0; i < n; ++i) {
            curv[i] = d2psi0(out.u[i], p);
        }
        auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            Eigen::VectorXd y = x + form.multiply(x) * inv_area - h_reg * (lap * x) + curv.cwiseProduct(x);
            return project_mean_zero(y);
        };
        const Eigen::VectorXd diag = base_diag + curv;
        auto precond = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return project_mean_zero(x.cwiseQuotient(diag));
        };
        const auto lin = conjugate_gradient(apply, project_mean_zero(-r), precond, CellField::Zero(n), 1e-13,
                                            0.1 * opts.tol, 10 * n + 100);
        const CellField delta = project_mean_zero(lin.x);

        double step = 1.0;
        for (int i = 0; i < n; ++i) {
            const double target = out.u[i] + delta[i];
            if (target > bound) {
                step = std::min(step, (bound - out.u[i]) / delta[i]);
            } else if (target < -bound) {
                step = std::min(step, (-bound - out.u[i]) / delta[i]);
            }
        }
        CellField trial;
        CellField trial_r;
        double trial_norm = 0.0;
        for (int halving = 0; halving < 40; ++halving) {
            trial = out.u + step * delta;
            trial_r = residual(trial);
            trial_norm = trial_r.norm();
            if (trial_norm < rnorm) {
                break;
            }
            step *= 0.5;
        }
        if (!(trial_norm < rnorm)) {
            throw std::runtime_error("resolvent: line search stalled, residual " + std::to_string(rnorm));
        }
        out.u = std::move(trial);
        r = std::move(trial_r);
        rnorm = trial_norm;
    }
    out.residual = rnorm;
    return out;
}

ChemPotDiagnostic chempot_diagnostic(const CellField& phi, const CellField& phi_k, const CellField& mu,
                                     const Grid& grid, const PotentialParams& p) {
    require_cell_field(grid, phi, "chempot_diagnostic");
    require_cell_field(grid, phi_k, "chempot_diagnostic");
    require_cell_field(grid, mu, "chempot_diagnostic");
    const double m = phi.mean();
    const double mk = phi_k.mean();
    if (std::abs(m - mk) > 1e-10 || !(std::abs(m) < 1.0)) {
        throw std::invalid_argument("chempot_diagnostic: means of phi and phi_k must agree and lie in (-1,1)");
    }
    CellField d(phi.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        d[i] = dpsi0(phi[i], p);
    }
    ChemPotDiagnostic out;
    out.psi0_prime_l2 = cell_norm(grid, d);
    out.mu_integral = std::abs(cell_integral(grid, mu));
    out.grad_mu_l2 = face_norm(grid, discrete_gradient(grid, mu));
    out.grad_phi_l2 = face_norm(grid, discrete_gradient(grid, phi));
    out.ratio = (out.psi0_prime_l2 + out.mu_integral) /
                (out.grad_mu_l2 + out.grad_phi_l2 * out.grad_phi_l2 + 1.0);
    return out;
}

} // namespace nlch
