#pragma once

// Schatten-class side: norms of the diagonal semigroup S(t) = e^{tA},
// A = -diag(lambda_j), the smoothing exponent gamma in ||S(t)||_p <= C t^{-gamma},
// and a Picard iteration for the mild flow equation in S^p.

#include "stochflow/flow.hpp"
#include "stochflow/noise.hpp"
#include "stochflow/operators.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace stochflow {

class SpectrumModel {
public:
    enum class Kind { explicit_list, power, laplacian2d };

    /// Finite spectrum; sorted on construction.
    static SpectrumModel values(std::vector<double> eigenvalues);
    /// lambda_j = scale * j^power for j = 1..cutoff, power >= 1.
    static SpectrumModel power_rule(double scale, double power, std::size_t cutoff);
    /// {k^2 + n^2 : 1 <= k, n <= n_max}.
    static SpectrumModel laplacian2d(std::size_t n_max);

    Kind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return eigenvalues_.size(); }
    /// Sorted ascending.
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    double largest() const { return eigenvalues_.back(); }

    /// Upper bound on sum_{j beyond the cutoff} e^{-p t lambda_j}; zero for explicit lists.
    double tail_bound(double t, double p) const;

    /// The generator -diag(lambda) in eigenvalue order.
    TruncatedOperator generator() const;

private:
    Kind kind_ = Kind::explicit_list;
    std::vector<double> eigenvalues_;
    double scale_ = 1.0;
    double power_ = 1.0;
    std::size_t n_max_ = 0;
};

SpectrumModel dirichlet_laplacian_spectrum(std::size_t n_max);

struct SchattenValue {
    double norm;
    /// Bound on the neglected part of sum e^{-p t lambda}, before taking the 1/p power.
    double tail;
};

/// (sum_j e^{-p lambda_j t})^{1/p} over the truncated spectrum.
SchattenValue semigroup_schatten_norm(const SpectrumModel& spec, double t, double p);

/// Smallest n_max with laplacian tail below `tolerance` relative to the sum at (t, p).
std::size_t laplacian_cutoff_for(double t, double p, double tolerance = 1e-12);

enum class SmoothingVerdict { satisfied, violated, undetermined };

std::string_view to_string(SmoothingVerdict v);

struct SmoothingReport {
    double p = 0.0;
    double fitted_gamma = 0.0;
    double gamma_stderr = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    SmoothingVerdict verdict = SmoothingVerdict::undetermined;
    /// gamma + 2 se < 1/2, only meaningful when the verdict is determined.
    bool satisfies_condition = false;
    std::pair<double, double> fit_range{0.0, 0.0};
    /// The largest eigenvalue has not decayed at the smallest t, so gamma is biased to 0.
    bool truncation_dominated = false;
    std::vector<double> times;
    std::vector<double> norms;
};

/// `count` log-spaced times in [t_min, t_max].
std::vector<double> log_spaced(double t_min, double t_max, std::size_t count);

/// Fits log ||S(t)||_p = c + gamma log(1/t) over t_grid (>= 8 points in (0, 1]).
SmoothingReport check_smoothing(const SpectrumModel& spec, double p, const std::vector<double>& t_grid);

struct PicardOptions {
    std::size_t max_iterations = 50;
    /// Stop once the residual falls below this multiple of max ||psi||_p.
    double relative_tolerance = 1e-14;
    /// Horizon halvings allowed after a divergence.
    int max_depth = 6;
};

struct PicardResult {
    FlowSample flow;
    /// r_m = max_i ||psi_{m+1}(t_i) - psi_m(t_i)||_p; elementwise max over chained segments.
    std::vector<double> residuals;
    std::size_t segments = 1;
    /// Mean of r_{m+1}/r_m over the final iterations.
    double contraction = 0.0;
};

/// Fixed-point iteration of X(t) = S(t - s) + int S(t - r) (B_0 X dr + sum_k B_k X dW_k)
/// with left-point sums. Throws PicardDivergence when even the shortest horizon diverges.
PicardResult picard_mild_solver(const SpectrumModel& spec, const OperatorFamily& family, const WienerPaths& paths,
                                double p, const PicardOptions& options = {});

/// Mean of residual ratios r_{m+1}/r_m after `burn_in`, ignoring zero residuals.
double residual_ratio(const std::vector<double>& residuals, std::size_t burn_in);

}  // namespace stochflow
