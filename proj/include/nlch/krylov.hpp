#pragma once

/// @file krylov.hpp
/// @brief Matrix-free CG and restarted GMRES on Eigen vectors.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace nlch {

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double residual = 0.0; // ‖b − A x‖₂ (true residual for CG, recursive for GMRES)
    bool converged = false;
};

/// Preconditioned conjugate gradients for an operator that is SPD on the
/// space the iterates live in. Stops when ‖r‖₂ ≤ max(rel_tol·‖b‖₂, abs_tol).
inline KrylovResult conjugate_gradient(const LinearMap& apply, const Eigen::VectorXd& b, const LinearMap& precond,
                                       Eigen::VectorXd x0, double rel_tol, double abs_tol, int max_iter) {
    KrylovResult out;
    out.x = std::move(x0);
    Eigen::VectorXd r = b - apply(out.x);
    const double target = std::max(rel_tol * b.norm(), abs_tol);
    double rnorm = r.norm();
    if (rnorm <= target) {
        out.residual = rnorm;
        out.converged = true;
        return out;
    }
    Eigen::VectorXd z = precond(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd ap = apply(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            break;
        }
        const double step = rz / pap;
        out.x += step * p;
        r -= step * ap;
        rnorm = r.norm();
        out.iterations = it;
        if (rnorm <= target) {
            break;
        }
        z = precond(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    out.converged = rnorm <= target;
    out.residual = (b - apply(out.x)).norm();
    return out;
}

/// Right-preconditioned restarted GMRES(m): solves A M⁻¹ y = b, x = M⁻¹ y.
/// Stops when the recursive residual satisfies ‖r‖₂ ≤ max(rel_tol·‖b‖₂, abs_tol).
inline KrylovResult gmres(const LinearMap& apply, const Eigen::VectorXd& b, const LinearMap& precond,
                          Eigen::VectorXd x0, double rel_tol, double abs_tol, int max_iter, int restart = 60) {
    KrylovResult out;
    out.x = std::move(x0);
    const double target = std::max(rel_tol * b.norm(), abs_tol);
    const Eigen::Index n = b.size();

    int total = 0;
    while (true) {
        Eigen::VectorXd r = b - apply(out.x);
        double beta = r.norm();
        out.residual = beta;
        if (beta <= target) {
            out.converged = true;
            break;
        }
        if (total >= max_iter) {
            break;
        }
        const int m = std::min(restart, max_iter - total);
        Eigen::MatrixXd basis(n, m + 1);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
        std::vector<double> cs(m), sn(m);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
        g[0] = beta;
        basis.col(0) = r / beta;

        int k = 0;
        for (; k < m; ++k) {
            Eigen::VectorXd w = apply(precond(basis.col(k)));
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= k; ++i) {
                    const double hik = basis.col(i).dot(w);
                    hess(i, k) += hik;
                    w -= hik * basis.col(i);
                }
            }
            hess(k + 1, k) = w.norm();
            if (hess(k + 1, k) > 0.0) {
                basis.col(k + 1) = w / hess(k + 1, k);
            } else {
                basis.col(k + 1).setZero();
            }
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
                hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
                hess(i, k) = t;
            }
            const double denom = std::hypot(hess(k, k), hess(k + 1, k));
            if (denom == 0.0) {
                break; // singular Krylov matrix; keep the first k directions
            }
            cs[k] = hess(k, k) / denom;
            sn[k] = hess(k + 1, k) / denom;
            hess(k, k) = denom;
            hess(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            ++total;
            out.iterations = total;
            if (std::abs(g[k + 1]) <= target) {
                ++k;
                break;
            }
        }
        if (k == 0) {
            break;
        }
        Eigen::VectorXd y = hess.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        out.x += precond(basis.leftCols(k) * y);
    }
    return out;
}

} // namespace nlch
