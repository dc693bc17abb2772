#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlch/flow.hpp"

#include <cmath>
#include <random>

using namespace nlch;

namespace {

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
        x[i] = u(rng);
    }
    return x;
}

FluidParams fluid(double rho1, double rho2) {
    FluidParams fp;
    fp.rho1 = rho1;
    fp.rho2 = rho2;
    return fp;
}

// Divergence-free face field from a random node stream function.
FaceField solenoidal(const Grid& g, std::mt19937_64& rng) {
    Eigen::VectorXd psi = random_vector(g.num_nodes(), rng);
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            if (i == 0 || j == 0 || i == g.nx() || j == g.ny()) {
                psi[g.node(i, j)] = 0.0;
            }
        }
    }
    FaceField v = FaceField::Zero(g.num_faces());
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            v[g.xface(i, j)] = (psi[g.node(i, j + 1)] - psi[g.node(i, j)]) / g.hy();
        }
    }
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            v[g.yface(i, j)] = -(psi[g.node(i + 1, j)] - psi[g.node(i, j)]) / g.hx();
        }
    }
    return v;
}

MomentumInputs quiet_inputs(const Grid& g, double rho, double h) {
    MomentumInputs in;
    const int n = g.num_cells();
    const int nf = g.num_faces();
    in.v_k = FaceField::Zero(nf);
    in.rho_k = CellField::Constant(n, rho);
    in.rho_new = in.rho_k;
    in.rho_s = in.rho_k;
    in.eta_k = CellField::Ones(n);
    in.J = FaceField::Zero(nf);
    in.phi_s = CellField::Constant(n, 0.3);
    in.mu = CellField::Constant(n, 1.7);
    in.w = FaceField::Zero(nf);
    in.h = h;
    return in;
}

} // namespace

TEST_CASE("density law") {
    const Grid g = build_grid(3, 3, 1.0, 1.0);
    const FluidParams fp = fluid(1.0, 3.0);
    CHECK((density_of(CellField::Ones(9), fp).array() == 3.0).all());
    CHECK((density_of(-CellField::Ones(9), fp).array() == 1.0).all());
    CHECK((density_of(CellField::Zero(9), fp).array() == 2.0).all());
    std::mt19937_64 rng(2);
    CHECK((density_of(random_vector(9, rng, 0.99), fluid(1.0, 1.0)).array() == 1.0).all());
    CHECK_THROWS_AS(density_of(CellField::Constant(9, 1.01), fp), std::invalid_argument);
    (void)g;
}

TEST_CASE("relative mass flux") {
    const Grid g = build_grid(6, 5, 1.0, 1.0);
    std::mt19937_64 rng(4);
    const CellField mu = random_vector(g.num_cells(), rng);
    const CellField phi_s = random_vector(g.num_cells(), rng, 0.9);
    CHECK(compute_flux(mu, phi_s, fluid(2.0, 2.0), g).cwiseAbs().maxCoeff() == 0.0);
    CHECK(compute_flux(CellField::Constant(g.num_cells(), 3.0), phi_s, fluid(1.0, 3.0), g).cwiseAbs().maxCoeff() ==
          0.0);

    CellField lin(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        lin[c] = 2.0 * g.cell_center(c).x;
    }
    const FaceField J = compute_flux(lin, phi_s, fluid(1.0, 3.0), g);
    for (int f = 0; f < g.num_faces(); ++f) {
        if (g.is_boundary_face(f) || f >= g.num_xfaces()) {
            CHECK(J[f] == 0.0);
        } else {
            CHECK(J[f] == doctest::Approx(-2.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("convection is skew") {
    std::mt19937_64 rng(8);
    const Grid g = build_grid(9, 7, 1.0, 0.8);
    for (int trial = 0; trial < 100; ++trial) {
        const CellField rho_s = CellField::Constant(g.num_cells(), 1.0) + random_vector(g.num_cells(), rng, 0.5).cwiseAbs();
        FaceField w = random_vector(g.num_faces(), rng);
        FaceField J = random_vector(g.num_faces(), rng);
        FaceField v = random_vector(g.num_faces(), rng);
        zero_boundary_faces(g, w);
        zero_boundary_faces(g, J);
        zero_boundary_faces(g, v);
        const FaceField cv = convection_apply(rho_s, w, J, v, g);
        CHECK(std::abs(cv.dot(v)) <= 1e-12 * v.squaredNorm());
    }
    const FaceField zero = FaceField::Zero(g.num_faces());
    FaceField v = random_vector(g.num_faces(), rng);
    zero_boundary_faces(g, v);
    CHECK(convection_apply(CellField::Ones(g.num_cells()), zero, zero, v, g).cwiseAbs().maxCoeff() == 0.0);
    FaceField w = random_vector(g.num_faces(), rng);
    zero_boundary_faces(g, w);
    CHECK(convection_apply(CellField::Ones(g.num_cells()), w, zero, zero, g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("viscous operator is symmetric and dissipative") {
    std::mt19937_64 rng(12);
    const Grid g = build_grid(8, 6, 1.0, 1.0);
    const CellField eta = CellField::Ones(g.num_cells()) + random_vector(g.num_cells(), rng, 0.5).cwiseAbs();
    const SparseMatrix visc = viscous_matrix(g, eta);
    for (int trial = 0; trial < 20; ++trial) {
        FaceField u = random_vector(g.num_faces(), rng);
        FaceField v = random_vector(g.num_faces(), rng);
        zero_boundary_faces(g, u);
        zero_boundary_faces(g, v);
        CHECK(face_inner(g, visc * u, v) == doctest::Approx(face_inner(g, u, visc * v)).epsilon(1e-12));
        const double d = viscous_dissipation(g, eta, v);
        CHECK(d > 0.0);
        CHECK(face_inner(g, visc * v, v) == doctest::Approx(d).epsilon(1e-12));
    }
    // rigid translation is not admissible (no slip), so only v = 0 dissipates nothing
    CHECK(viscous_dissipation(g, eta, FaceField::Zero(g.num_faces())) == 0.0);
}

TEST_CASE("momentum solve: zero forcing and zero history") {
    const Grid g = build_grid(10, 10, 1.0, 1.0);
    const MomentumInputs in = quiet_inputs(g, 2.0, 1e-3);
    const MomentumSolveResult r = solve_momentum(in, g);
    CHECK(r.flow.v.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(r.flow.p.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("momentum solve: gradient forcing is absorbed by the pressure") {
    std::mt19937_64 rng(21);
    const Grid g = build_grid(12, 10, 1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        MomentumInputs in = quiet_inputs(g, 1.5, 1e-2);
        in.mu = random_vector(g.num_cells(), rng);
        const MomentumSolveResult r = solve_momentum(in, g);
        CHECK(r.flow.v.cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(std::abs(r.flow.p.mean()) <= 1e-12);
    }
}

TEST_CASE("momentum solve: divergence, residual and tested energy balance") {
    std::mt19937_64 rng(33);
    const Grid g = build_grid(16, 12, 1.0, 0.75);
    const FluidParams fp = fluid(1.0, 3.0);
    const MomentumOptions opts;
    for (int trial = 0; trial < 5; ++trial) {
        MomentumInputs in;
        const int n = g.num_cells();
        const CellField phi_k = random_vector(n, rng, 0.8);
        const CellField phi_new = random_vector(n, rng, 0.8);
        in.phi_s = random_vector(n, rng, 0.8);
        in.v_k = solenoidal(g, rng);
        in.w = solenoidal(g, rng);
        in.rho_k = density_of(phi_k, fp);
        in.rho_new = density_of(phi_new, fp);
        in.rho_s = density_of(in.phi_s, fp);
        in.eta_k = CellField::Ones(n) + random_vector(n, rng, 0.5).cwiseAbs();
        in.mu = random_vector(n, rng);
        in.J = compute_flux(in.mu, in.phi_s, fp, g);
        in.h = 1e-2;
        const MomentumSolver solver(g);
        const MomentumSolveResult r = solver.solve(in, opts);
        CHECK(r.divergence_inf <= opts.tol_div);
        CHECK(r.momentum_residual <= opts.tol_mom);
        CHECK(r.flow.v.cwiseAbs().maxCoeff() > 0.0);
        const FaceField res = in.h * solver.residual(in, r.flow);
        CHECK(res.norm() / std::sqrt(double(g.num_faces())) == doctest::Approx(r.momentum_residual).epsilon(1e-6));
        // convection and pressure do no work, so the tested balance closes up to the residual
        const double scale = std::sqrt(g.cell_area() * g.num_faces()) * face_norm(g, r.flow.v);
        CHECK(std::abs(momentum_energy_defect(g, in, r.flow.v)) <= 10.0 * opts.tol_mom * scale);
    }
}

TEST_CASE("material laws") {
    MaterialLaw lin{"linear", 1.0, 3.0};
    CHECK(lin(-1.0) == 1.0);
    CHECK(lin(1.0) == 3.0);
    CHECK(lin(0.0) == 2.0);
    CHECK(lin.lower() == 1.0);
    CHECK(lin.upper() == 3.0);
    CHECK_THROWS_AS(require_valid_law({"cubic", 1.0, 1.0}, "eta"), std::invalid_argument);
    CHECK_THROWS_AS(require_valid_law({"constant", 0.0, 0.0}, "eta"), std::invalid_argument);
    CHECK_THROWS_AS(require_valid_fluid(fluid(-1.0, 1.0)), std::invalid_argument);
}
