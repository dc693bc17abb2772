#pragma once

/// @file grid.hpp
/// @brief Uniform MAC-staggered grid on a rectangle and its discrete calculus.
///
/// Scalars live at cell centers, velocity components on faces. x-faces are
/// numbered first (j*(nx+1)+i, i in [0,nx]), followed by y-faces
/// (offset + j*nx+i, j in [0,ny]). Boundary faces carry the no-flux /
/// no-slip condition and are identically zero for every face field the
/// operators below produce.

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nlch {

using CellField = Eigen::VectorXd;
using FaceField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

class Grid {
public:
    /// Throws std::invalid_argument for non-positive counts or lengths.
    Grid(int nx, int ny, double lx, double ly);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double hx() const { return lx_ / nx_; }
    double hy() const { return ly_ / ny_; }
    double cell_area() const { return hx() * hy(); }
    double domain_area() const { return lx_ * ly_; }

    int num_cells() const { return nx_ * ny_; }
    int num_xfaces() const { return (nx_ + 1) * ny_; }
    int num_yfaces() const { return nx_ * (ny_ + 1); }
    int num_faces() const { return num_xfaces() + num_yfaces(); }
    /// Interior corner plus boundary nodes: (nx+1)*(ny+1).
    int num_nodes() const { return (nx_ + 1) * (ny_ + 1); }

    int cell(int i, int j) const { return j * nx_ + i; }
    int xface(int i, int j) const { return j * (nx_ + 1) + i; }
    int yface(int i, int j) const { return num_xfaces() + j * nx_ + i; }
    int node(int i, int j) const { return j * (nx_ + 1) + i; }

    Point cell_center(int c) const;
    Point face_center(int f) const;
    bool is_boundary_face(int f) const;

    bool operator==(const Grid&) const = default;

private:
    int nx_;
    int ny_;
    double lx_;
    double ly_;
};

Grid build_grid(int nx, int ny, double lx, double ly);

/// Σ u_i·hx·hy.
double cell_integral(const Grid& grid, const CellField& u);
double cell_mean(const Grid& grid, const CellField& u);
/// Area-weighted L² inner products.
double cell_inner(const Grid& grid, const CellField& a, const CellField& b);
double face_inner(const Grid& grid, const FaceField& a, const FaceField& b);
double cell_norm(const Grid& grid, const CellField& u);
double face_norm(const Grid& grid, const FaceField& w);

/// Difference quotients on interior faces, zero on boundary faces.
FaceField discrete_gradient(const Grid& grid, const CellField& u);
/// MAC divergence; the negative adjoint of discrete_gradient on fields with
/// zero boundary faces.
CellField discrete_divergence(const Grid& grid, const FaceField& w);

/// Sparse matrices of the two operators above (faces×cells, cells×faces).
SparseMatrix gradient_matrix(const Grid& grid);
SparseMatrix divergence_matrix(const Grid& grid);

/// 5-point Neumann Laplacian = divergence ∘ gradient. Symmetric, negative
/// semidefinite, zero row sums.
SparseMatrix neumann_laplacian(const Grid& grid);

/// Arithmetic mean of the two cells adjacent to each face. A boundary face
/// takes the value of its single adjacent cell.
FaceField face_average(const Grid& grid, const CellField& u);

/// Face velocities averaged to cell centers, interleaved (u0, v0, u1, v1, ...).
Eigen::VectorXd cell_center_velocity(const Grid& grid, const FaceField& v);

/// Zero every boundary face in place.
void zero_boundary_faces(const Grid& grid, FaceField& w);

/// Mean-zero projection of a cell field (uniform cells, so the plain average).
CellField project_mean_zero(const CellField& u);

void require_cell_field(const Grid& grid, const CellField& u, const char* what);
void require_face_field(const Grid& grid, const FaceField& w, const char* what);

} // namespace nlch
