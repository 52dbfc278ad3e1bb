#pragma once

// Diagonal case: A = sum_j alpha_j e_j (x) e_j, B_k = sigma_k e_k (x) e_k.
// Eigenvalue processes, existence and flow criteria, spectrum
// classification and three-series diagnostics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stochflow {

/// k -> coef * k^power * (log(k+1))^log_power, or an explicit list (1-based).
/// The log(k+1) form keeps every rule finite at k = 1.
class SequenceRule {
public:
    static SequenceRule constant(double c);
    static SequenceRule power_log(double coef, double power, double log_power);
    static SequenceRule values(std::vector<double> v);

    double operator()(std::size_t k) const;
    /// Continuous extension of a symbolic rule to real k >= 1.
    double at(double k) const;

    /// Symbolic rules have decidable suprema and limits over all k.
    bool symbolic() const noexcept { return explicit_.empty(); }
    double coef() const noexcept { return coef_; }
    double power() const noexcept { return power_; }
    double log_power() const noexcept { return log_power_; }
    const std::vector<double>& explicit_values() const noexcept { return explicit_; }
    std::string describe() const;

private:
    double coef_ = 0.0;
    double power_ = 0.0;
    double log_power_ = 0.0;
    std::vector<double> explicit_;
};

/// One term c k^a (log k)^b of an asymptotic expansion.
struct GrowthTerm {
    double coef;
    double power;
    double log_power;
};

/// Limit of a finite sum of growth terms as k -> infinity (+-inf, 0 or a constant).
double asymptotic_limit(const std::vector<GrowthTerm>& terms);

/// Whether sum_k c k^p (log(k+1))^q converges.
bool series_converges(const SequenceRule& rule);

class DiagonalModel {
public:
    DiagonalModel(SequenceRule alpha, SequenceRule sigma, std::size_t cutoff);

    const SequenceRule& alpha() const noexcept { return alpha_; }
    const SequenceRule& sigma() const noexcept { return sigma_; }
    std::size_t cutoff() const noexcept { return cutoff_; }

private:
    SequenceRule alpha_;
    SequenceRule sigma_;
    std::size_t cutoff_;
};

/// exp{sigma_k dW + (alpha_k - sigma_k^2 / 2)(t - s)}.
double zeta(const DiagonalModel& model, std::size_t k, double s, double t, double dw);

/// Supremum evaluated symbolically when possible, otherwise up to a cutoff.
struct SupremumReport {
    bool finite = true;
    double value = 0.0;
    /// Saturates at SIZE_MAX when the maximizer lies beyond the integer range.
    std::size_t argmax = 1;
    double log_argmax = 0.0;
    /// False when a rule could only be evaluated up to the cutoff.
    bool determined = true;
};

/// sup_k (2 alpha_k + sigma_k^2) < infinity.
struct L2Report {
    bool solvable = true;
    SupremumReport sup;
};

L2Report l2_solvability(const DiagonalModel& model, std::size_t scan_limit = 1000000);

/// rho(s,t) = sup_k {(alpha_k - sigma_k^2 / 2) sqrt(t - s) + sigma_k sqrt(2 log k)}.
SupremumReport flow_criterion_rho(const DiagonalModel& model, double s, double t,
                                  std::size_t scan_limit = 1000000);

/// sup_k {(alpha_k - sigma_k^2 / 2)(t - s) + sigma_k sqrt(2 (t - s) log k)}, the unscaled form.
SupremumReport flow_supremum_unscaled(const DiagonalModel& model, double s, double t,
                                      std::size_t scan_limit = 1000000);

enum class SpectrumClass { noncompact_limit, trace_class_as, mixed, undetermined };

std::string_view to_string(SpectrumClass c);

/// Raises InconsistentModel when sigma_k accumulates at a finite nonzero value
/// or when the alpha = 0 flow criterion fails.
SpectrumClass classify_spectrum(const DiagonalModel& model, double s, double t);

struct SeriesCurve {
    std::string name;
    std::vector<double> terms;
    std::vector<double> partial_sums;
    /// Ratios of consecutive dyadic block sums sum_{2^j <= k < 2^{j+1}}.
    std::vector<double> block_ratios;
    bool convergent = false;
};

inline constexpr double kTailRatioThreshold = 0.9;
inline constexpr std::size_t kTailRatioSustain = 4;

struct ThreeSeriesReport {
    SeriesCurve exceedance;  // sum P(zeta_k > 1)
    SeriesCurve truncated_mean;  // sum E Y_k, Y_k = zeta_k 1{zeta_k <= 1}
    SeriesCurve truncated_variance;  // sum Var Y_k
    std::vector<double> delta;  // b^2 sigma_k^2 / (2 log(k+1)), b = sqrt(t - s) / 2
    bool variance_below_mean = true;  // Var Y_k <= E Y_k for every k
};

ThreeSeriesReport three_series_diagnostic(const DiagonalModel& model, double s, double t, std::size_t count);

/// Block-ratio verdict on a nonnegative series.
SeriesCurve summarize_series(std::string name, std::vector<double> terms);

struct CriteriaReport {
    bool l2_solvable = false;
    SupremumReport sup_2a_plus_s2;
    SupremumReport rho;
    SpectrumClass classification = SpectrumClass::undetermined;
    std::optional<ThreeSeriesReport> three_series;
};

CriteriaReport criteria_report(const DiagonalModel& model, double s, double t, std::size_t series_count);

/// zeta_k(s, t) for k = 1..count with dW_k = terminal_increment(seed, k - 1, t - s).
std::vector<double> sample_zetas(const DiagonalModel& model, double s, double t, std::uint64_t seed,
                                 std::size_t count);

struct TraceCurve {
    std::vector<double> partial_sums;
    std::vector<double> analytic_mean;  // sum_{j <= k} e^{alpha_j (t - s)}
};

TraceCurve sample_trace(const DiagonalModel& model, double s, double t, std::uint64_t seed, std::size_t count);

/// Sup-norm functionals of the multiplication-operator family (+inf when divergent).
struct MultiplicationInput {
    double sum_sq_sup;  // || sum_k e_k^2 ||_inf
    std::optional<double> log_sqrt_sum;  // || sum_k log(sqrt k) |e_k| ||_inf
    std::optional<double> sqrt_log_sum;  // || sum_k |e_k| sqrt(log k) ||_inf
};

struct MultiplicationVerdict {
    bool l2_solvable = false;
    double mu_total = 0.0;  // sum_k e_k^2, the spectral mass for homogeneous fields
    std::optional<bool> log_sqrt_sufficient;
    std::optional<bool> sqrt_log_sufficient;
    bool flow_exists_sufficient = false;
};

MultiplicationVerdict multiplication_criteria(const MultiplicationInput& input);

/// Functionals of W = sum a_k (W_k cos<xi, eta_k> + W~_k sin<xi, eta_k>).
MultiplicationInput homogeneous_field_functionals(const SequenceRule& amplitudes, std::size_t cutoff = 1000000);

/// Brownian sheet on [0, L)^d: sum_k e_k^2(xi) = xi_1 ... xi_d <= L^d.
MultiplicationInput brownian_sheet_functionals(std::size_t dimension, double length);

/// P(Z > x) for standard normal Z, and its logarithm accurate far in the tail.
double normal_tail(double x);
double log_normal_tail(double x);

}  // namespace stochflow
