#pragma once

/// @file config.hpp
/// @brief Run configuration: parsing, validation, echo and initial data.

#include "nlch/flow.hpp"
#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/nonlocal_form.hpp"
#include "nlch/potential.hpp"
#include "nlch/stepper.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace nlch {

/// Parse or validation failure. Messages name the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridConfig {
    int nx = 16;
    int ny = 16;
    double lx = 1.0;
    double ly = 1.0;
};

struct KernelConfig {
    double alpha = 1.5;
    double c0 = 1.0;
    double C0 = 1.0;
    OmegaSpec omega{"constant", {{"value", 1.0}}};
    int r_sub = 4;
    double r_near = 2.0;
};

struct TimeConfig {
    double h = 1e-3;
    int n_steps = 10;
    bool fallback_halving = false;
    int max_halvings = 3;
};

/// Named generator with numeric parameters, or a snapshot file to reload.
struct InitialConfig {
    std::string generator = "constant";
    std::map<std::string, double> params{{"mean", 0.0}};
    std::string snapshot;
};

struct OutputConfig {
    int cadence = 0;
    std::string directory = "output";
};

struct SimConfig {
    GridConfig grid;
    KernelConfig kernel;
    PotentialParams potential;
    FluidParams fluid;
    TimeConfig time;
    SolverTolerances tol;
    InitialConfig initial;
    OutputConfig output;
};

/// Throws ConfigError naming the field and range.
void validate_config(const SimConfig& cfg);

SimConfig config_from_json(const nlohmann::json& j);
/// All fields, defaults included.
nlohmann::json config_to_json(const SimConfig& cfg);

/// Throws ConfigError with line/column for malformed files.
SimConfig parse_config(const std::filesystem::path& path);
SimConfig parse_config_string(const std::string& text);

Grid make_grid(const SimConfig& cfg);
KernelSpec make_kernel(const SimConfig& cfg);
QuadratureOptions make_quadrature(const SimConfig& cfg);
StepperOptions make_stepper_options(const SimConfig& cfg);

/// Generators clamp into [−1+δ₀, 1−δ₀] with δ₀ = 0.05.
inline constexpr double kGeneratorMargin = 0.05;

struct InitialData {
    CellField phi;
    FaceField v;
    double achieved_mean = 0.0;
};

/// "constant" {mean}; "cosine" {mean, amplitude, frequency};
/// "tanh_blob" {cx, cy, radius, width, inside, outside};
/// "random_smooth" {mean, amplitude, modes, seed}. A snapshot path, if set,
/// overrides the generator. Throws ConfigError when the mean leaves (−1,1).
InitialData make_initial_data(const SimConfig& cfg, const Grid& grid);

} // namespace nlch
