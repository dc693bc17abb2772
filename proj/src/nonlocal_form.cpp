#include "nlch/nonlocal_form.hpp"
#include "nlch/krylov.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nlch {

NonlocalForm::NonlocalForm(Eigen::MatrixXd matrix, double cell_area, QuadratureOptions quad)
    : matrix_(std::move(matrix)), cell_area_(cell_area), quad_(quad) {
    if (matrix_.rows() != matrix_.cols()) {
        throw std::invalid_argument("NonlocalForm: matrix must be square");
    }
}

Eigen::VectorXd NonlocalForm::multiply(const Eigen::VectorXd& u) const {
    if (u.size() != matrix_.rows()) {
        throw std::invalid_argument("NonlocalForm: size mismatch");
    }
    if (u.size() == 0) {
        return u;
    }
    const Eigen::VectorXd shifted = u.array() - u[0];
    return matrix_ * shifted;
}

void gauss_legendre_unit(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    if (n < 1) {
        throw std::invalid_argument("gauss_legendre_unit: n must be >= 1");
    }
    nodes.resize(n);
    weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int k = 0; k < n; ++k) {
        double x = std::cos(pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int m = 2; m <= n; ++m) {
                const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // map [-1,1] -> [0,1]
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 1.0 / ((1.0 - x * x) * dp * dp); // 2/(...) on [-1,1], halved
    }
}

namespace {

void require_assemblable(const Grid& grid, const QuadratureOptions& quad) {
    if (grid.num_cells() > kMaxDenseCells) {
        throw std::length_error("assemble_form: " + std::to_string(grid.num_cells()) +
                                " cells exceed the dense budget of " + std::to_string(kMaxDenseCells));
    }
    if (quad.r_sub < 1) {
        throw std::invalid_argument("assemble_form: r_sub must be >= 1");
    }
    if (!(quad.cutoff > 0.0)) {
        throw std::invalid_argument("assemble_form: cutoff must be positive");
    }
}

struct SubCellRule {
    std::vector<Point> offsets; // relative to the cell's lower-left corner
    std::vector<double> weights; // sum to the cell area
};

SubCellRule sub_cell_rule(const Grid& grid, int r_sub) {
    Eigen::VectorXd nodes, weights;
    gauss_legendre_unit(r_sub, nodes, weights);
    SubCellRule rule;
    for (int b = 0; b < r_sub; ++b) {
        for (int a = 0; a < r_sub; ++a) {
            rule.offsets.push_back({nodes[a] * grid.hx(), nodes[b] * grid.hy()});
            rule.weights.push_back(weights[a] * weights[b] * grid.cell_area());
        }
    }
    return rule;
}

} // namespace

NonlocalForm assemble_form(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad) {
    require_valid_kernel(spec);
    require_assemblable(grid, quad);

    const int n = grid.num_cells();
    const int nx = grid.nx();
    const double area = grid.cell_area();
    const double half_exp = -0.5 * (spec.dim + spec.alpha);
    const bool use_sub = quad.r_sub > 1 && quad.r_near > 0.0;
    const SubCellRule rule = sub_cell_rule(grid, quad.r_sub);
    const double cutoff2 = std::isinf(quad.cutoff) ? std::numeric_limits<double>::infinity() : quad.cutoff * quad.cutoff;

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        const Point xa = grid.cell_center(a);
        const int ia = a % nx;
        const int ja = a / nx;
        for (int b = a + 1; b < n; ++b) {
            const Point xb = grid.cell_center(b);
            const double dx = xa.x - xb.x;
            const double dy = xa.y - xb.y;
            const double r2 = dx * dx + dy * dy;
            if (r2 > cutoff2) {
                continue;
            }
            const int di = b % nx - ia;
            const int dj = b / nx - ja;
            double w = 0.0;
            if (use_sub && std::sqrt(double(di * di + dj * dj)) < quad.r_near) {
                const Point oa{xa.x - 0.5 * grid.hx(), xa.y - 0.5 * grid.hy()};
                const Point ob{xb.x - 0.5 * grid.hx(), xb.y - 0.5 * grid.hy()};
                for (std::size_t p = 0; p < rule.offsets.size(); ++p) {
                    const Point xp{oa.x + rule.offsets[p].x, oa.y + rule.offsets[p].y};
                    for (std::size_t q = 0; q < rule.offsets.size(); ++q) {
                        const Point xq{ob.x + rule.offsets[q].x, ob.y + rule.offsets[q].y};
                        const double ex = xp.x - xq.x;
                        const double ey = xp.y - xq.y;
                        w += rule.weights[p] * rule.weights[q] * spec.omega(xp, xq) *
                             std::pow(ex * ex + ey * ey, half_exp);
                    }
                }
            } else {
                w = area * area * spec.omega(xa, xb) * std::pow(r2, half_exp);
            }
            // ordered pairs (a,b) and (b,a) both contribute w(e_a−e_b)(e_a−e_b)ᵀ
            k(a, b) = -2.0 * w;
            k(b, a) = -2.0 * w;
        }
    }
    for (int a = 0; a < n; ++a) {
        double diag = 0.0;
        for (int b = 0; b < n; ++b) {
            if (b != a) {
                diag -= k(b, a);
            }
        }
        k(a, a) = diag;
    }
    return NonlocalForm(std::move(k), area, quad);
}

NonlocalForm gagliardo_reference(const Grid& grid, double alpha, const QuadratureOptions& quad) {
    KernelSpec spec;
    spec.alpha = alpha;
    spec.c0 = 1.0;
    spec.C0 = 1.0;
    return assemble_form(grid, spec, quad);
}

double apply_bilinear(const NonlocalForm& form, const CellField& u, const CellField& v) {
    if (u.size() != form.size() || v.size() != form.size()) {
        throw std::invalid_argument("apply_bilinear: size mismatch");
    }
    return u.dot(form.multiply(v));
}

CellField apply_operator(const NonlocalForm& form, const CellField& u) {
    if (u.size() != form.size()) {
        throw std::invalid_argument("apply_operator: size mismatch");
    }
    return form.multiply(u) / form.cell_area();
}

RegularizedSolveResult regularized_solve(const NonlocalForm& form, const SparseMatrix& lap, double theta,
                                         const CellField& g, const RegularizedSolveOptions& opts) {
    const int n = form.size();
    if (g.size() != n || lap.rows() != n || lap.cols() != n) {
        throw std::invalid_argument("regularized_solve: size mismatch");
    }
    if (!(theta >= 0.0)) {
        throw std::invalid_argument("regularized_solve: theta must be >= 0");
    }
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if (std::abs(g.mean()) > 1e-12 * scale) {
        throw std::invalid_argument("regularized_solve: right-hand side must have zero mean");
    }
    RegularizedSolveResult out;
    if (g.norm() == 0.0) {
        out.u = CellField::Zero(n);
        return out;
    }
    const double inv_area = 1.0 / form.cell_area();
    auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd y = form.multiply(x) * inv_area;
        if (theta > 0.0) {
            y -= theta * (lap * x);
        }
        return project_mean_zero(y);
    };
    const Eigen::VectorXd diag = (form.matrix().diagonal() * inv_area - theta * lap.diagonal()).cwiseMax(1e-300);
    auto precond = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
        return project_mean_zero(r.cwiseQuotient(diag));
    };
    const CellField rhs = project_mean_zero(g);
    auto res = conjugate_gradient(apply, rhs, precond, CellField::Zero(n), opts.tol, 0.0, opts.max_iter);
    out.u = project_mean_zero(res.x);
    out.iterations = res.iterations;
    Eigen::VectorXd full = form.multiply(out.u) * inv_area - g;
    if (theta > 0.0) {
        full -= theta * (lap * out.u);
    }
    out.residual = full.norm();
    if (out.residual > opts.tol * g.norm() * 10.0) {
        throw std::runtime_error("regularized_solve: no convergence, residual " + std::to_string(out.residual));
    }
    return out;
}

std::uint64_t form_cache_key(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad) {
    std::ostringstream desc;
    desc.precision(17);
    desc << grid.nx() << ' ' << grid.ny() << ' ' << grid.lx() << ' ' << grid.ly() << '|' << spec.alpha << ' '
         << spec.c0 << ' ' << spec.C0 << ' ' << spec.omega_spec.name;
    for (const auto& [key, value] : spec.omega_spec.params) {
        desc << ' ' << key << '=' << value;
    }
    desc << '|' << quad.r_sub << ' ' << quad.r_near << ' ' << quad.cutoff;
    const std::string s = desc.str();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {
constexpr char kMagic[8] = {'N', 'L', 'F', 'O', 'R', 'M', '0', '1'};
}

void save_form(const std::filesystem::path& path, const NonlocalForm& form, std::uint64_t key) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_form: cannot open " + path.string());
    }
    const std::uint64_t rows = form.size();
    const std::uint64_t cols = form.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&key), sizeof(key));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    // K is symmetric, so column-major storage equals row-major order.
    out.write(reinterpret_cast<const char*>(form.matrix().data()),
              static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!out) {
        throw std::runtime_error("save_form: write failed for " + path.string());
    }
}

bool load_form(const std::filesystem::path& path, std::uint64_t key, double cell_area, const QuadratureOptions& quad,
               NonlocalForm& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return false;
    }
    char magic[8];
    std::uint64_t stored_key = 0, rows = 0, cols = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&stored_key), sizeof(stored_key));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || stored_key != key || rows != cols ||
        rows > static_cast<std::uint64_t>(kMaxDenseCells)) {
        return false;
    }
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) {
        return false;
    }
    out = NonlocalForm(std::move(m), cell_area, quad);
    return true;
}

NonlocalForm assemble_form_cached(const Grid& grid, const KernelSpec& spec, const QuadratureOptions& quad,
                                  const std::filesystem::path& cache_dir) {
    const std::uint64_t key = form_cache_key(grid, spec, quad);
    std::ostringstream name;
    name << "form_" << std::hex << key << ".bin";
    const auto path = cache_dir / name.str();
    NonlocalForm form(Eigen::MatrixXd(), grid.cell_area(), quad);
    if (load_form(path, key, grid.cell_area(), quad, form) && form.size() == grid.num_cells()) {
        return form;
    }
    form = assemble_form(grid, spec, quad);
    std::filesystem::create_directories(cache_dir);
    save_form(path, form, key);
    return form;
}

} // namespace nlch
