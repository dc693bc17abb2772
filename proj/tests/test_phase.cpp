#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlch/phase.hpp"
#include "nlch/smoothing.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace nlch;

namespace {

std::shared_ptr<const NonlocalForm> unit_form(const Grid& g) {
    const KernelSpec spec = make_kernel_spec(1.5, 1.0, 1.0, OmegaSpec{"constant", {{"value", 1.0}}});
    return std::make_shared<const NonlocalForm>(assemble_form(g, spec));
}

FluidParams fluid() {
    FluidParams fp;
    fp.rho1 = 1.0;
    fp.rho2 = 3.0;
    return fp;
}

PotentialParams potential() {
    PotentialParams p;
    p.theta = 1.0;
    p.theta_c = 2.0;
    p.kappa = 2.0;
    return p;
}

double deviation(const CellField& u) {
    return (u.array() - u.mean()).abs().maxCoeff();
}

// Divergence-free face field from a node stream function vanishing on the boundary.
FaceField stirring(const Grid& g, double amp) {
    FaceField v = FaceField::Zero(g.num_faces());
    auto psi = [&](int i, int j) {
        const double x = i * g.hx() / g.lx();
        const double y = j * g.hy() / g.ly();
        return amp * std::pow(std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y), 2);
    };
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 1; i < g.nx(); ++i) {
            v[g.xface(i, j)] = (psi(i, j + 1) - psi(i, j)) / g.hy();
        }
    }
    for (int j = 1; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            v[g.yface(i, j)] = -(psi(i + 1, j) - psi(i, j)) / g.hx();
        }
    }
    return v;
}

} // namespace

TEST_CASE("constant state is a fixed point") {
    const Grid g = build_grid(8, 8, 1.0, 1.0);
    const auto form = unit_form(g);
    const PotentialParams p = potential();
    for (double m0 : {-0.6, 0.0, 0.2, 0.75}) {
        const CellField phi_k = CellField::Constant(g.num_cells(), m0);
        const FaceField v = FaceField::Zero(g.num_faces());
        const PhaseSolveResult r = phase_subsolve(phi_k, phi_k, v, 1e-3, g, form, fluid(), p);
        CHECK((r.phi - phi_k).cwiseAbs().maxCoeff() <= 1e-14);
        const double expected = psi_eval(m0, p).dpsi;
        CHECK(expected == doctest::Approx(dpsi0(m0, p) - p.kappa * m0).epsilon(1e-14));
        CHECK((r.mu.array() - expected).abs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("mass is conserved for random admissible inputs") {
    const Grid g = build_grid(12, 10, 1.0, 1.0);
    const auto form = unit_form(g);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 4; ++trial) {
        CellField phi_k(g.num_cells());
        for (int c = 0; c < g.num_cells(); ++c) {
            phi_k[c] = 0.1 + u(rng);
        }
        const CellField phi_s = smooth(phi_k, 1e-3, g);
        const FaceField v = stirring(g, 0.5 * (trial + 1));
        const PhaseSolveResult r = phase_subsolve(phi_k, phi_s, v, 1e-3, g, form, fluid(), potential());
        CHECK(std::abs(r.phi.mean() - phi_k.mean()) <= 1e-12);
        CHECK(r.phi.cwiseAbs().maxCoeff() < 1.0);
        CHECK(r.residual <= 1e-9);
    }
}

TEST_CASE("small perturbation decays") {
    const Grid g = build_grid(16, 16, 1.0, 1.0);
    const auto form = unit_form(g);
    const PotentialParams p = potential();
    const double m0 = 0.2;
    CellField phi_k(g.num_cells());
    for (int c = 0; c < g.num_cells(); ++c) {
        phi_k[c] = m0 + 1e-3 * std::cos(std::numbers::pi * g.cell_center(c).x);
    }
    const FaceField v = FaceField::Zero(g.num_faces());
    const PhaseSolver solver(g, form, fluid(), p, 1e-3, m0);
    const PhaseSolveResult r = solver.solve(phi_k, smooth(phi_k, 1e-3, g), v, phi_k);
    CHECK(deviation(r.phi) < deviation(phi_k));
    CHECK(r.residual <= 1e-9);
    // the chemical potential returned is the one the relation defines at the solution
    const CellField mu = solver.chemical_potential(r.phi, phi_k);
    CHECK((mu - r.mu).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, mu.cwiseAbs().maxCoeff()));
    const CellField res = solver.scaled_residual(phi_k, smooth(phi_k, 1e-3, g), v, r.phi);
    CHECK(res.norm() / std::sqrt(double(g.num_cells())) == doctest::Approx(r.residual).epsilon(1e-6));
}

TEST_CASE("incompatible velocity is rejected") {
    const Grid g = build_grid(6, 6, 1.0, 1.0);
    const auto form = unit_form(g);
    const CellField phi_k = CellField::Constant(g.num_cells(), 0.1);
    FaceField v = FaceField::Zero(g.num_faces());
    v[g.xface(0, 2)] = 1.0;
    CHECK_THROWS_AS(phase_subsolve(phi_k, phi_k, v, 1e-3, g, form, fluid(), potential()), std::invalid_argument);
    FaceField w = FaceField::Zero(g.num_faces());
    w[g.xface(3, 2)] = 1.0;
    CHECK_THROWS_AS(phase_subsolve(phi_k, phi_k, w, 1e-3, g, form, fluid(), potential()), std::invalid_argument);
    CHECK_THROWS_AS(PhaseSolver(g, form, fluid(), potential(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(PhaseSolver(build_grid(5, 6, 1.0, 1.0), form, fluid(), potential(), 1e-3), std::invalid_argument);
}
