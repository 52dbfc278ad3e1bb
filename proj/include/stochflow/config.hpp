#pragma once

// Experiment configuration: YAML file with sections experiment, model, grid,
// monte_carlo, solver and output. Every field has a per-experiment default,
// so a file only needs the keys it changes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stochflow {

struct ModelConfig {
    std::size_t dim = 3;
    std::size_t noise_count = 2;
    /// M = sum_k ||B_k|| of the generated noise family.
    double bound = 0.5;
    /// ||B_0|| of the generated drift (0 disables the drift).
    double drift_norm = 0.0;
    std::uint64_t family_seed = 7;
    /// (alpha, sigma) pairs for the diagonal moment check.
    std::vector<double> alpha{};
    std::vector<double> sigma{};
    /// [coef, power, log_power] rules k -> coef k^power log(k+1)^log_power.
    std::vector<double> alpha_rule{0.0, 0.0, 0.0};
    std::vector<double> sigma_rule{1.0, 0.0, 1.0};
    /// Constant noise strength of the extreme-value growth curve.
    double skorokhod_sigma = 1.0;
    /// Number of diagonal modes (trace and three-series lengths).
    std::size_t cutoff = 100000;
    /// Schatten exponents.
    std::vector<double> p{3.0};
    /// Laplacian truncation; 0 picks the smallest cutoff with a negligible tail.
    std::size_t n_max = 0;
};

struct GridConfig {
    double s = 0.0;
    double t_end = 1.0;
    std::size_t steps = 1024;
    /// Step-count ladder, or lag ladder in steps for moment experiments. Strictly increasing.
    std::vector<std::size_t> ladder{};
    /// Mode-count ladder for the extreme-value curve.
    std::vector<std::size_t> k_ladder{};
    double t_min = 1e-4;
    double t_max = 1e-2;
    std::size_t t_points = 16;
};

struct MonteCarloConfig {
    std::size_t n_paths = 100;
    std::uint64_t seed = 20240917;
    std::size_t n_seeds = 101;
};

struct SolverConfig {
    std::size_t chaos_order = 8;
    std::size_t moment_l = 2;
    std::size_t picard_iterations = 60;
    double picard_tolerance = 1e-12;
    std::string euler_scheme = "exponential";
};

struct OutputConfig {
    std::string dir = "out";
};

struct ExperimentConfig {
    std::string experiment;
    ModelConfig model;
    GridConfig grid;
    MonteCarloConfig monte_carlo;
    SolverConfig solver;
    OutputConfig output;
};

/// Names accepted in the `experiment` field.
const std::vector<std::string>& experiment_names();

/// Full default configuration of a named experiment; SchemaError for unknown names.
ExperimentConfig default_config(const std::string& experiment);

/// Parses YAML text on top of the experiment defaults. Unknown keys, wrong
/// types and invalid values raise SchemaError naming the field.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Re-checks value constraints (ladders increasing, counts >= 1, ...).
void validate(const ExperimentConfig& cfg);

/// Canonical YAML rendering, used in verdict files and for round trips.
std::string to_yaml(const ExperimentConfig& cfg);

}  // namespace stochflow
