#pragma once

/// @file nonlocal_form.hpp
/// @brief Dense assembly of the nonlocal bilinear form
///   E(u,v) = ∫∫ (u(x)−u(y))(v(x)−v(y)) k(x,y,x−y) dx dy
/// on piecewise-constant cell fields, and the θ-regularized elliptic solve.

#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

namespace nlch {

struct QuadratureOptions {
    /// Gauss points per axis per cell for near pairs (1 = midpoint rule everywhere).
    int r_sub = 4;
    /// Pairs whose center distance, measured in cell widths, is below r_near
    /// use the sub-cell rule.
    double r_near = 2.0;
    /// Pairs farther apart than this (in length units) are dropped.
    double cutoff = std::numeric_limits<double>::infinity();

    static QuadratureOptions midpoint() { return {1, 0.0, std::numeric_limits<double>::infinity()}; }
};

/// Largest grid for which the dense (N×N) form is assembled.
inline constexpr int kMaxDenseCells = 8192;

/// Symmetric positive-semidefinite matrix K with K·1 = 0 such that uᵀKv
/// approximates E(u,v). Immutable after construction.
class NonlocalForm {
public:
    NonlocalForm(Eigen::MatrixXd matrix, double cell_area, QuadratureOptions quad);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    int size() const { return static_cast<int>(matrix_.rows()); }
    double cell_area() const { return cell_area_; }
    const QuadratureOptions& quadrature() const { return quad_; }

    /// K·u, evaluated as K·(u − u₀·1) so constant fields map to exactly zero.
    Eigen::VectorXd multiply(const Eigen::VectorXd& u) const;

private:
    Eigen::MatrixXd matrix_;
    double cell_area_;
    QuadratureOptions quad_;
};

/// Gauss–Legendre nodes and weights on [0,1].
void gauss_legendre_unit(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Pairwise assembly K = Σ_{i≠j} w_ij (e_i−e_j)(e_i−e_j)ᵀ over ordered pairs, with
/// w_ij ≈ ∫_{C_i}∫_{C_j} k. Throws std::length_error beyond kMaxDenseCells.
NonlocalForm assemble_form(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad = {});

/// Same assembly with ω ≡ 1.
NonlocalForm gagliardo_reference(const Grid& grid, double alpha, const QuadratureOptions& quad = {});

/// uᵀKv.
double apply_bilinear(const NonlocalForm& form, const CellField& u, const CellField& v);

/// (1/cell area)·K·u, the Riesz representative of Lu; zero mean.
CellField apply_operator(const NonlocalForm& form, const CellField& u);

struct RegularizedSolveOptions {
    double tol = 1e-10; // relative to ‖g‖₂
    int max_iter = 5000;
};

struct RegularizedSolveResult {
    CellField u;
    double residual = 0.0; // ‖θ(−Δ)u + K u/area − g‖₂
    int iterations = 0;
};

/// Mean-zero u with θ(−Δ_N)u + (1/area)K u = g. g must have zero mean; with
/// θ = 0, K has to be definite on mean-zero fields. Throws std::invalid_argument
/// on bad input, std::runtime_error on non-convergence.
RegularizedSolveResult regularized_solve(const NonlocalForm& form, const SparseMatrix& lap, double theta,
                                         const CellField& g, const RegularizedSolveOptions& opts = {});

/// Cache key for (grid, spec, quad).
std::uint64_t form_cache_key(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad);

/// Binary cache: magic "NLFORM01", uint64 key, uint64 rows, uint64 cols,
/// then row-major float64 entries. Little-endian host layout.
void save_form(const std::filesystem::path& path, const NonlocalForm& form, std::uint64_t key);
/// Returns false when the file is missing or was written for another key.
bool load_form(const std::filesystem::path& path, std::uint64_t key, double cell_area, const QuadratureOptions& quad,
               NonlocalForm& out);

/// Loads from cache_dir when a matching file exists, otherwise assembles and stores.
NonlocalForm assemble_form_cached(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad,
                                  const std::filesystem::path& cache_dir);

} // namespace nlch
