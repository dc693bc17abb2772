#include "nlch/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlch {

Grid::Grid(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx < 1 || ny < 1) {
        throw std::invalid_argument("grid: cell counts must be >= 1");
    }
    if (!(lx > 0.0) || !(ly > 0.0)) {
        throw std::invalid_argument("grid: side lengths must be positive");
    }
}

Point Grid::cell_center(int c) const {
    const int i = c % nx_;
    const int j = c / nx_;
    return {(i + 0.5) * hx(), (j + 0.5) * hy()};
}

Point Grid::face_center(int f) const {
    if (f < num_xfaces()) {
        const int i = f % (nx_ + 1);
        const int j = f / (nx_ + 1);
        return {i * hx(), (j + 0.5) * hy()};
    }
    const int g = f - num_xfaces();
    const int i = g % nx_;
    const int j = g / nx_;
    return {(i + 0.5) * hx(), j * hy()};
}

bool Grid::is_boundary_face(int f) const {
    if (f < num_xfaces()) {
        const int i = f % (nx_ + 1);
        return i == 0 || i == nx_;
    }
    const int j = (f - num_xfaces()) / nx_;
    return j == 0 || j == ny_;
}

Grid build_grid(int nx, int ny, double lx, double ly) { return Grid(nx, ny, lx, ly); }

void require_cell_field(const Grid& grid, const CellField& u, const char* what) {
    if (u.size() != grid.num_cells()) {
        throw std::invalid_argument(std::string(what) + ": cell field has " + std::to_string(u.size()) +
                                    " entries, grid has " + std::to_string(grid.num_cells()) + " cells");
    }
}

void require_face_field(const Grid& grid, const FaceField& w, const char* what) {
    if (w.size() != grid.num_faces()) {
        throw std::invalid_argument(std::string(what) + ": face field has " + std::to_string(w.size()) +
                                    " entries, grid has " + std::to_string(grid.num_faces()) + " faces");
    }
}

double cell_integral(const Grid& grid, const CellField& u) {
    require_cell_field(grid, u, "cell_integral");
    return u.sum() * grid.cell_area();
}

double cell_mean(const Grid& grid, const CellField& u) {
    require_cell_field(grid, u, "cell_mean");
    return u.sum() / grid.num_cells();
}

double cell_inner(const Grid& grid, const CellField& a, const CellField& b) {
    require_cell_field(grid, a, "cell_inner");
    require_cell_field(grid, b, "cell_inner");
    return grid.cell_area() * a.dot(b);
}

double face_inner(const Grid& grid, const FaceField& a, const FaceField& b) {
    require_face_field(grid, a, "face_inner");
    require_face_field(grid, b, "face_inner");
    return grid.cell_area() * a.dot(b);
}

double cell_norm(const Grid& grid, const CellField& u) { return std::sqrt(cell_inner(grid, u, u)); }
double face_norm(const Grid& grid, const FaceField& w) { return std::sqrt(face_inner(grid, w, w)); }

FaceField discrete_gradient(const Grid& grid, const CellField& u) {
    require_cell_field(grid, u, "discrete_gradient");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    FaceField g = FaceField::Zero(grid.num_faces());
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            g[grid.xface(i, j)] = (u[grid.cell(i, j)] - u[grid.cell(i - 1, j)]) * ihx;
        }
    }
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            g[grid.yface(i, j)] = (u[grid.cell(i, j)] - u[grid.cell(i, j - 1)]) * ihy;
        }
    }
    return g;
}

CellField discrete_divergence(const Grid& grid, const FaceField& w) {
    require_face_field(grid, w, "discrete_divergence");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    CellField d(grid.num_cells());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            d[grid.cell(i, j)] = (w[grid.xface(i + 1, j)] - w[grid.xface(i, j)]) * ihx +
                                 (w[grid.yface(i, j + 1)] - w[grid.yface(i, j)]) * ihy;
        }
    }
    return d;
}

SparseMatrix gradient_matrix(const Grid& grid) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * grid.num_cells());
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i) {
            t.emplace_back(grid.xface(i, j), grid.cell(i, j), ihx);
            t.emplace_back(grid.xface(i, j), grid.cell(i - 1, j), -ihx);
        }
    }
    for (int j = 1; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            t.emplace_back(grid.yface(i, j), grid.cell(i, j), ihy);
            t.emplace_back(grid.yface(i, j), grid.cell(i, j - 1), -ihy);
        }
    }
    SparseMatrix g(grid.num_faces(), grid.num_cells());
    g.setFromTriplets(t.begin(), t.end());
    return g;
}

SparseMatrix divergence_matrix(const Grid& grid) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double ihx = 1.0 / grid.hx();
    const double ihy = 1.0 / grid.hy();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * grid.num_cells());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = grid.cell(i, j);
            t.emplace_back(c, grid.xface(i + 1, j), ihx);
            t.emplace_back(c, grid.xface(i, j), -ihx);
            t.emplace_back(c, grid.yface(i, j + 1), ihy);
            t.emplace_back(c, grid.yface(i, j), -ihy);
        }
    }
    SparseMatrix d(grid.num_cells(), grid.num_faces());
    d.setFromTriplets(t.begin(), t.end());
    return d;
}

SparseMatrix neumann_laplacian(const Grid& grid) {
    SparseMatrix lap = divergence_matrix(grid) * gradient_matrix(grid);
    lap.prune(0.0);
    return lap;
}

FaceField face_average(const Grid& grid, const CellField& u) {
    require_cell_field(grid, u, "face_average");
    const int nx = grid.nx();
    const int ny = grid.ny();
    FaceField f(grid.num_faces());
    for (int j = 0; j < ny; ++j) {
        f[grid.xface(0, j)] = u[grid.cell(0, j)];
        f[grid.xface(nx, j)] = u[grid.cell(nx - 1, j)];
        for (int i = 1; i < nx; ++i) {
            f[grid.xface(i, j)] = 0.5 * (u[grid.cell(i - 1, j)] + u[grid.cell(i, j)]);
        }
    }
    for (int i = 0; i < nx; ++i) {
        f[grid.yface(i, 0)] = u[grid.cell(i, 0)];
        f[grid.yface(i, ny)] = u[grid.cell(i, ny - 1)];
        for (int j = 1; j < ny; ++j) {
            f[grid.yface(i, j)] = 0.5 * (u[grid.cell(i, j - 1)] + u[grid.cell(i, j)]);
        }
    }
    return f;
}

Eigen::VectorXd cell_center_velocity(const Grid& grid, const FaceField& v) {
    require_face_field(grid, v, "cell_center_velocity");
    Eigen::VectorXd out(2 * grid.num_cells());
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const int c = grid.cell(i, j);
            out[2 * c] = 0.5 * (v[grid.xface(i, j)] + v[grid.xface(i + 1, j)]);
            out[2 * c + 1] = 0.5 * (v[grid.yface(i, j)] + v[grid.yface(i, j + 1)]);
        }
    }
    return out;
}

void zero_boundary_faces(const Grid& grid, FaceField& w) {
    require_face_field(grid, w, "zero_boundary_faces");
    for (int j = 0; j < grid.ny(); ++j) {
        w[grid.xface(0, j)] = 0.0;
        w[grid.xface(grid.nx(), j)] = 0.0;
    }
    for (int i = 0; i < grid.nx(); ++i) {
        w[grid.yface(i, 0)] = 0.0;
        w[grid.yface(i, grid.ny())] = 0.0;
    }
}

CellField project_mean_zero(const CellField& u) {
    return u.array() - u.mean();
}

} // namespace nlch
