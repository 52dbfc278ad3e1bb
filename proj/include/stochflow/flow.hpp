#pragma once

// Constructions of the linear stochastic flow for
//   dX = A X dt + B_0 X dt + sum_k B_k X dW_k,   X(s) = I,
// all consuming the same WienerPaths so that solvers can be compared pathwise.

#include "stochflow/noise.hpp"
#include "stochflow/operators.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stochflow {

enum class SolverTag {
    euler,
    chaos,
    commutative_ito,
    commutative_strat,
    doss_sussmann,
    inverse_dual,
    picard_schatten,
};

std::string_view to_string(SolverTag tag);

/// One realization of t -> X(s, t) on the grid. frames[0] is the identity.
struct FlowSample {
    TimeGrid grid;
    std::vector<TruncatedOperator> frames;
    SolverTag solver;
    std::uint64_t seed;
    /// Grid offset of frames[0] within the grid of the driving noise.
    std::size_t origin = 0;

    const TruncatedOperator& terminal() const { return frames.back(); }
};

enum class EulerScheme {
    /// X_{i+1} = e^{dt A} (X_i + B_0 X_i dt + sum_k B_k X_i dW_k)
    exponential,
    /// X_{i+1} = X_i + (A + B_0) X_i dt + sum_k B_k X_i dW_k, bounded A only
    plain,
};

FlowSample euler_flow(const std::optional<TruncatedOperator>& generator, const OperatorFamily& family,
                      const WienerPaths& paths, EulerScheme scheme = EulerScheme::exponential);

struct ChaosConfig {
    int max_order = 4;
    /// Number of noise operators used; 0 means all of the family.
    std::size_t index_cutoff = 0;
    /// Moment parameter for the tail bound.
    int moment_l = 2;
};

/// Refuses configurations with more than this many index tuples at the top order.
inline constexpr double kChaosTupleLimit = 1e7;

/// Truncated Wiener chaos I + sum_{n <= n_max} sum_{|alpha| = n} I_alpha B^alpha.
FlowSample chaos_flow(const OperatorFamily& family, const WienerPaths& paths, const ChaosConfig& cfg);

/// Iterated integral I_alpha(s, t_i) on the grid by left-point sums; index 0 integrates against dt.
std::vector<double> iterated_integral(const WienerPaths& paths, std::span<const int> alpha);

/// sum_{n > n_max} M^n C_L^n (max(1, delta^{2Ln}) / n!)^{1/(2L)} delta^{1/2 - 1/(2L)}, C_L = 2L / (2L - 1).
double chaos_tail_bound(double bound, double delta, int moment_l, int max_order);

/// exp{sum_k B_k dW_k + B_0 (t - s) - 1/2 sum_k B_k^2 (t - s)}; family must commute.
FlowSample commutative_ito_flow(const OperatorFamily& family, const WienerPaths& paths);

/// exp{(t - s) B_0 + sum_k dW_k B_k}; family must commute.
FlowSample commutative_strat_flow(const OperatorFamily& family, const WienerPaths& paths);

/// Dual flow Z with dZ = (-B_0^T + (sum B_k^2)^T) Z dt - sum_k B_k^T Z dW_k, so Z^T Y -> I.
FlowSample inverse_flow(const OperatorFamily& family, const WienerPaths& paths);

/// Yosida approximation of A = -diag(decay): entries -lambda a_j / (lambda + a_j).
TruncatedOperator yosida(std::span<const double> decay, double lambda);

/// X = Y G with Y the noise-only flow (drift 1/2 sum B_k^2) and G solving
/// dG = Y^{-1} (A_lambda - B_0) Y G dt by classical RK4 on the grid.
/// `noise` must have zero drift and commuting members; A = -diag(decay).
FlowSample doss_sussmann_flow(std::span<const double> decay, const OperatorFamily& noise, const WienerPaths& paths,
                              double lambda);

/// ||restart(t_j, t_l) flow(s, t_j) - flow(s, t_l)||.
double cocycle_defect(const FlowSample& flow, std::size_t i, std::size_t j, std::size_t l,
                      const FlowSample& restart);

/// CSV: header "t,x_1_1,...", one row per grid time with row-major frame entries.
void write_frames_csv(const FlowSample& flow, std::ostream& out);

/// Throws NonCommutingFamily naming the first offending pair.
void require_commuting(const OperatorFamily& family);

}  // namespace stochflow
