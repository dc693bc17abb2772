#pragma once

/// @file smoothing.hpp
/// @brief Smoothing operator P_h: implicit Euler steps of the Neumann heat flow.

#include "nlch/grid.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace nlch {

/// Solves (I − (h/substeps)Δ_N)u = φ `substeps` times. The factorization is
/// computed once and shared read-only; apply() is safe to call concurrently.
class Smoother {
public:
    Smoother(const Grid& grid, double h, int substeps = 1);

    CellField apply(const CellField& phi) const;

    double h() const { return h_; }
    int substeps() const { return substeps_; }

private:
    Grid grid_;
    double h_;
    int substeps_;
    std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// One-shot convenience wrapper around Smoother.
CellField smooth(const CellField& phi, double h, const Grid& grid, int substeps = 1);

} // namespace nlch
