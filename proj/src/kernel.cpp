#include "nlch/kernel.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

namespace nlch {

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

struct OmegaRegistry {
    std::mutex mutex;
    std::map<std::string, OmegaFactory> factories;

    OmegaRegistry() {
        factories["constant"] = [](const std::map<std::string, double>& p) -> WeightFunction {
            const double value = param_or(p, "value", 1.0);
            return [value](const Point&, const Point&) { return value; };
        };
        factories["sinusoidal"] = [](const std::map<std::string, double>& p) -> WeightFunction {
            const double amplitude = param_or(p, "amplitude", 0.5);
            return [amplitude](const Point& x, const Point& y) { return 1.0 + amplitude * std::sin(x.x + y.x); };
        };
    }
};

OmegaRegistry& registry() {
    static OmegaRegistry r;
    return r;
}

} // namespace

void register_omega(const std::string& name, OmegaFactory factory) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    r.factories[name] = std::move(factory);
}

bool has_omega(const std::string& name) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    return r.factories.count(name) > 0;
}

WeightFunction make_omega(const OmegaSpec& spec) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    const auto it = r.factories.find(spec.name);
    if (it == r.factories.end()) {
        throw std::invalid_argument("kernel: unknown omega '" + spec.name + "'");
    }
    return it->second(spec.params);
}

void require_valid_kernel(const KernelSpec& spec) {
    if (!(spec.alpha > 1.0 && spec.alpha < 2.0)) {
        throw std::invalid_argument("kernel: alpha must lie in (1,2)");
    }
    if (!(spec.c0 > 0.0) || !(spec.C0 >= spec.c0)) {
        throw std::invalid_argument("kernel: require 0 < c0 <= C0");
    }
    if (spec.dim != 2) {
        throw std::invalid_argument("kernel: only d = 2 is supported");
    }
    if (!spec.omega) {
        throw std::invalid_argument("kernel: omega is not set");
    }
}

KernelSpec make_kernel_spec(double alpha, double c0, double C0, const OmegaSpec& omega) {
    KernelSpec spec;
    spec.alpha = alpha;
    spec.c0 = c0;
    spec.C0 = C0;
    spec.omega_spec = omega;
    spec.omega = make_omega(omega);
    require_valid_kernel(spec);
    return spec;
}

double eval_kernel(const KernelSpec& spec, const Point& x, const Point& y) {
    const double dx = x.x - y.x;
    const double dy = x.y - y.y;
    const double r2 = dx * dx + dy * dy;
    if (r2 == 0.0) {
        throw SingularEvaluation("kernel: singular evaluation at x == y");
    }
    return spec.omega(x, y) * std::pow(r2, -0.5 * (spec.dim + spec.alpha));
}

KernelValidation validate_kernel(const KernelSpec& spec, int n_samples, std::uint64_t seed, double lx, double ly) {
    if (n_samples < 1) {
        throw std::invalid_argument("validate_kernel: n_samples must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, lx);
    std::uniform_real_distribution<double> uy(0.0, ly);

    KernelValidation report;
    report.min_ratio = std::numeric_limits<double>::infinity();
    report.max_ratio = -std::numeric_limits<double>::infinity();
    const double exponent = spec.dim + spec.alpha;

    for (int s = 0; s < n_samples; ++s) {
        Point x{ux(rng), uy(rng)};
        Point y{ux(rng), uy(rng)};
        if (x.x == y.x && x.y == y.y) {
            continue;
        }
        const double kxy = eval_kernel(spec, x, y);
        const double kyx = eval_kernel(spec, y, x);
        const double r = std::hypot(x.x - y.x, x.y - y.y);
        const double ratio = kxy * std::pow(r, exponent);
        report.min_ratio = std::min(report.min_ratio, ratio);
        report.max_ratio = std::max(report.max_ratio, ratio);

        if (!report.passed) {
            continue;
        }
        std::ostringstream why;
        if (std::abs(kxy - kyx) > 1e-14 * std::abs(kxy)) {
            report.symmetric = false;
            why << "symmetry violated: k(x,y)=" << kxy << " k(y,x)=" << kyx;
        } else if (ratio < spec.c0 * (1.0 - 1e-14)) {
            why << "lower bound violated: ratio " << ratio << " < c0 = " << spec.c0;
        } else if (ratio > spec.C0 * (1.0 + 1e-14)) {
            why << "upper bound violated: ratio " << ratio << " > C0 = " << spec.C0;
        } else {
            continue;
        }
        report.passed = false;
        report.offending = std::make_pair(x, y);
        std::ostringstream where;
        where << why.str() << " at x=(" << x.x << "," << x.y << "), y=(" << y.x << "," << y.y << ")";
        report.message = where.str();
    }
    if (report.passed) {
        report.message = "ok";
    }
    return report;
}

} // namespace nlch
