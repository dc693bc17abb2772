#pragma once

/// @file kernel.hpp
/// @brief Singular interaction kernel k(x,y,z) = ω(x,y)·|z|^{-d-α}.

#include "nlch/grid.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace nlch {

/// Symmetric, bounded, strictly positive weight ω(x,y).
using WeightFunction = std::function<double(const Point&, const Point&)>;

/// Named weight with the parameters it was built from (kept for config echo
/// and cache keys).
struct OmegaSpec {
    std::string name = "constant";
    std::map<std::string, double> params;
};

struct KernelSpec {
    double alpha = 1.5;
    double c0 = 1.0;
    double C0 = 1.0;
    OmegaSpec omega_spec;
    WeightFunction omega = [](const Point&, const Point&) { return 1.0; };
    int dim = 2;
};

/// Thrown by eval_kernel for coincident points.
class SingularEvaluation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using OmegaFactory = std::function<WeightFunction(const std::map<std::string, double>&)>;

/// Registry of named weights. Built-ins:
///   "constant"   ω ≡ value                         (param: value, default 1)
///   "sinusoidal" ω = 1 + amplitude·sin(x₁+y₁)      (param: amplitude, default 0.5)
void register_omega(const std::string& name, OmegaFactory factory);
bool has_omega(const std::string& name);
WeightFunction make_omega(const OmegaSpec& spec);

/// Builds a spec from its serializable description; validates alpha range and constants.
KernelSpec make_kernel_spec(double alpha, double c0, double C0, const OmegaSpec& omega);

/// Throws std::invalid_argument unless 1 < alpha < 2, 0 < c0 <= C0, d = 2.
void require_valid_kernel(const KernelSpec& spec);

/// ω(x,y)·|x−y|^{-d-α}; throws SingularEvaluation when x == y.
double eval_kernel(const KernelSpec& spec, const Point& x, const Point& y);

struct KernelValidation {
    bool passed = true;
    bool symmetric = true;
    /// Extremes of k(x,y,z)·|z|^{d+α} over the sample.
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    std::optional<std::pair<Point, Point>> offending;
    std::string message;
};

/// Samples n_samples point pairs in [0,lx]×[0,ly] and checks exchange
/// symmetry and c0 ≤ k·|z|^{d+α} ≤ C0.
KernelValidation validate_kernel(const KernelSpec& spec, int n_samples, std::uint64_t seed, double lx = 1.0,
                                 double ly = 1.0);

} // namespace nlch
