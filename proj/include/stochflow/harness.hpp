#pragma once

// Monte Carlo estimators and experiment orchestration.

#include "stochflow/config.hpp"
#include "stochflow/diagonal.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stochflow {

// ---------------------------------------------------------------------------
// Test families

/// Gaussian entries, B_k rescaled so that ||B_k|| = bound / K and ||B_0|| = drift_norm.
OperatorFamily random_family(std::size_t dim, std::size_t noise_count, double bound, double drift_norm,
                             std::uint64_t seed);

/// B_k = Q D_k Q^T with one random orthogonal Q, so every member commutes.
OperatorFamily commuting_family(std::size_t dim, std::size_t noise_count, double bound, double drift_norm,
                                std::uint64_t seed);

/// Commuting skew-symmetric noise: Q (rotation blocks) Q^T sharing the planes; dim must be even.
OperatorFamily skew_commuting_family(std::size_t dim, std::size_t noise_count, double bound, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Monte Carlo

/// Builds one flow realization from driving paths.
using FlowBuilder = std::function<FlowSample(const WienerPaths&)>;

struct MonteCarloSetup {
    TimeGrid grid;
    std::size_t noise_count;
    std::size_t n_paths;
    std::uint64_t seed;
};

/// Paths for replicate i: sample_wiener(grid, noise_count, derive_seed(seed, i)).
WienerPaths replicate_paths(const MonteCarloSetup& setup, std::size_t index);

/// E ||terminal frame||^q with jackknife standard error.
stats::Estimate mc_moment(const FlowBuilder& build, const MonteCarloSetup& setup, double q);

struct MomentReport {
    int L = 2;
    std::vector<double> increments;
    std::vector<double> moments;
    std::vector<double> std_errors;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    /// 95% interval for the slope.
    std::pair<double, double> slope_ci{0.0, 0.0};
    double threshold = 0.0;
    bool passes = false;
};

inline constexpr double kSlopeTolerance = 0.15;
inline constexpr double kNoiseFloorRatio = 0.3;

/// Regression of log E||Y(s, t) - Y(s, t - h)||^{2L} on log h, h = lag * dt.
/// Passes when the slope is >= L - 1 - 0.15. NoiseFloor when any s.e. exceeds 30% of its estimate.
MomentReport holder_slope(const FlowBuilder& build, const MonteCarloSetup& setup, int L,
                          const std::vector<std::size_t>& lag_steps);

/// Two-parameter version: E||Y(s, t) - Y(u, v)||^{2L} against (u - s) + (t - v),
/// each lag split evenly between the two ends.
MomentReport holder_slope_two_parameter(const FlowBuilder& build, const MonteCarloSetup& setup, int L,
                                        const std::vector<std::size_t>& lag_steps);

struct GrowthCurve {
    std::vector<std::size_t> k;
    std::vector<double> median_max;
    /// exp(sigma sqrt(2 delta log K)).
    std::vector<double> envelope;
    /// Geometric mean of median / envelope.
    double envelope_constant = 0.0;
    bool envelope_ok = false;
    bool monotone = false;
    double growth_ratio = 0.0;
};

inline constexpr double kEnvelopeLow = 0.3;
inline constexpr double kEnvelopeHigh = 3.0;

/// Median over seeds of max_{k <= K} zeta_k(0, delta) for the given model.
GrowthCurve growth_curve(const DiagonalModel& model, double delta, const std::vector<std::size_t>& k_ladder,
                         std::size_t n_seeds, std::uint64_t seed, double envelope_sigma);

/// Constant noise strength sigma, alpha = 0.
GrowthCurve skorokhod_growth(double sigma, double delta, const std::vector<std::size_t>& k_ladder,
                             std::size_t n_seeds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments

struct Criterion {
    std::string name;
    double value = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
    bool passed = false;

    static Criterion within(std::string name, double value, std::optional<double> lower, std::optional<double> upper);
    static Criterion flag(std::string name, bool ok);
};

struct ExperimentResult {
    std::string experiment;
    std::vector<Criterion> criteria;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<std::filesystem::path> files;
    double wall_seconds = 0.0;

    bool passed() const;
};

/// Runs cfg.experiment, writing CSVs and <experiment>.verdict.json into cfg.output.dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Experiments behind each CLI subcommand.
std::vector<std::string> experiments_for(const std::string& subcommand);

/// Shrinks a default configuration for quick reruns (used by the determinism check).
ExperimentConfig reduced_config(const std::string& experiment);

/// Runs every reduced experiment three times (1 thread, 8 threads, 1 thread again)
/// under `out` and compares all CSV bytes.
ExperimentResult determinism_check(const std::filesystem::path& out, std::uint64_t seed);

}  // namespace stochflow
