#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlch/grid.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace nlch;

namespace {

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
        x[i] = u(rng);
    }
    return x;
}

} // namespace

TEST_CASE("build_grid counts and geometry") {
    const Grid g = build_grid(2, 2, 1.0, 1.0);
    CHECK(g.num_cells() == 4);
    CHECK(g.cell_area() == 0.25);
    CHECK(g.num_xfaces() == 6);
    CHECK(g.num_yfaces() == 6);

    const Grid one = build_grid(1, 1, 1.0, 1.0);
    CHECK(one.num_cells() == 1);
    CHECK(one.num_xfaces() == 2);
    CHECK(one.num_yfaces() == 2);

    const Grid rect = build_grid(4, 2, 2.0, 1.0);
    CHECK(rect.hx() == 0.5);
    CHECK(rect.hy() == 0.5);

    CHECK_THROWS_AS(build_grid(0, 2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(2, 2, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("cell_integral") {
    const Grid g = build_grid(64, 64, 1.0, 1.0);
    CHECK(cell_integral(g, CellField::Ones(g.num_cells())) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cell_integral(g, CellField::Zero(g.num_cells())) == 0.0);
    CellField x(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        x[c] = g.cell_center(c).x;
    }
    CHECK(cell_integral(g, x) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(cell_integral(g, CellField::Ones(3)), std::invalid_argument);
}

TEST_CASE("gradient of constant and linear data") {
    const Grid g = build_grid(8, 6, 2.0, 1.5);
    CHECK(discrete_gradient(g, CellField::Constant(g.num_cells(), 3.7)).cwiseAbs().maxCoeff() == 0.0);

    const double s = 2.5;
    CellField u(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        u[c] = s * g.cell_center(c).x;
    }
    const FaceField gu = discrete_gradient(g, u);
    for (int f = 0; f < g.num_faces(); ++f) {
        if (g.is_boundary_face(f)) {
            CHECK(gu[f] == 0.0);
        } else if (f < g.num_xfaces()) {
            CHECK(gu[f] == doctest::Approx(s).epsilon(1e-12));
        } else {
            CHECK(gu[f] == 0.0);
        }
    }
    // div of that gradient vanishes on interior cells
    const CellField d = discrete_divergence(g, gu);
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 1; i + 1 < g.nx(); ++i) {
            CHECK(std::abs(d[g.cell(i, j)]) < 1e-11);
        }
    }
}

TEST_CASE("gradient and divergence are negative adjoints") {
    std::mt19937_64 rng(7);
    const Grid g = build_grid(7, 5, 1.3, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        const CellField u = random_vector(g.num_cells(), rng);
        FaceField w = random_vector(g.num_faces(), rng);
        zero_boundary_faces(g, w);
        const double lhs = face_inner(g, discrete_gradient(g, u), w);
        const double rhs = -cell_inner(g, u, discrete_divergence(g, w));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
        CHECK(std::abs(cell_integral(g, discrete_divergence(g, w))) < 1e-13);
    }
    CHECK(discrete_divergence(g, FaceField::Zero(g.num_faces())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Neumann Laplacian") {
    std::mt19937_64 rng(3);
    const Grid g = build_grid(6, 4, 1.0, 0.5);
    const SparseMatrix lap = neumann_laplacian(g);
    CHECK((lap * CellField::Constant(g.num_cells(), 2.0)).cwiseAbs().maxCoeff() < 1e-12);
    const CellField u = random_vector(g.num_cells(), rng);
    const CellField w = random_vector(g.num_cells(), rng);
    CHECK(u.dot(lap * w) == doctest::Approx(w.dot(lap * u)).epsilon(1e-13));
    // equals D∘G
    const CellField dg = discrete_divergence(g, discrete_gradient(g, u));
    CHECK((dg - lap * u).cwiseAbs().maxCoeff() < 1e-10);

    const Grid small = build_grid(2, 2, 1.0, 1.0);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(neumann_laplacian(small));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    const Eigen::VectorXd ev = eig.eigenvalues();
    int zeros = 0;
    for (int i = 0; i < 4; ++i) {
        if (std::abs(ev[i]) < 1e-12) {
            ++zeros;
        } else {
            CHECK(ev[i] < 0.0);
        }
    }
    CHECK(zeros == 1);
}

TEST_CASE("face_average and cell_center_velocity") {
    const Grid g = build_grid(3, 2, 1.0, 1.0);
    const FaceField fa = face_average(g, CellField::Constant(g.num_cells(), 4.0));
    CHECK((fa.array() == 4.0).all());
    FaceField v = FaceField::Zero(g.num_faces());
    v[g.xface(1, 0)] = 2.0;
    const Eigen::VectorXd vc = cell_center_velocity(g, v);
    CHECK(vc.size() == 2 * g.num_cells());
    CHECK(vc[2 * g.cell(0, 0)] == doctest::Approx(1.0));
    CHECK(vc[2 * g.cell(1, 0)] == doctest::Approx(1.0));
    CHECK(vc[2 * g.cell(0, 0) + 1] == 0.0);
}
