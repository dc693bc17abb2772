#include "nlch/smoothing.hpp"

#include <stdexcept>

namespace nlch {

Smoother::Smoother(const Grid& grid, double h, int substeps) : grid_(grid), h_(h), substeps_(substeps) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("smooth: h must be positive");
    }
    if (substeps < 1) {
        throw std::invalid_argument("smooth: substeps must be >= 1");
    }
    const int n = grid.num_cells();
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    Eigen::SparseMatrix<double> op = id - (h / substeps) * Eigen::SparseMatrix<double>(neumann_laplacian(grid));
    auto factor = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(op);
    if (factor->info() != Eigen::Success) {
        throw std::runtime_error("smooth: factorization of the heat operator failed");
    }
    factor_ = std::move(factor);
}

CellField Smoother::apply(const CellField& phi) const {
    require_cell_field(grid_, phi, "smooth");
    if (phi.size() == 0) {
        return phi;
    }
    // Constants are fixed points; shifting by one entry keeps them exact in floating point.
    const double shift = phi[0];
    CellField u = phi.array() - shift;
    for (int s = 0; s < substeps_; ++s) {
        u = factor_->solve(u);
        if (factor_->info() != Eigen::Success) {
            throw std::runtime_error("smooth: linear solve failed");
        }
    }
    return u.array() + shift;
}

CellField smooth(const CellField& phi, double h, const Grid& grid, int substeps) {
    return Smoother(grid, h, substeps).apply(phi);
}

} // namespace nlch
