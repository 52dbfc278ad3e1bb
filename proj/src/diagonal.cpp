#include "stochflow/diagonal.hpp"

#include "stochflow/errors.hpp"
#include "stochflow/noise.hpp"
#include "stochflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace stochflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// lexicographic comparison of growth orders k^a (log k)^b
int compare_order(double a1, double b1, double a2, double b2) {
    if (a1 != a2) return a1 < a2 ? -1 : 1;
    if (b1 != b2) return b1 < b2 ? -1 : 1;
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// SequenceRule

SequenceRule SequenceRule::constant(double c) { return power_log(c, 0.0, 0.0); }

SequenceRule SequenceRule::power_log(double coef, double power, double log_power) {
    SequenceRule r;
    r.coef_ = coef;
    r.power_ = power;
    r.log_power_ = log_power;
    return r;
}

SequenceRule SequenceRule::values(std::vector<double> v) {
    if (v.empty()) throw DomainError("explicit sequence rule needs at least one value");
    SequenceRule r;
    r.explicit_ = std::move(v);
    return r;
}

double SequenceRule::at(double k) const {
    if (!explicit_.empty()) throw DomainError("explicit sequences have no continuous extension");
    if (coef_ == 0.0) return 0.0;
    double v = coef_;
    if (power_ != 0.0) v *= std::pow(k, power_);
    if (log_power_ != 0.0) v *= std::pow(std::log1p(k), log_power_);
    return v;
}

double SequenceRule::operator()(std::size_t k) const {
    if (k == 0) throw IndexOutOfRange("sequence rules are 1-based");
    if (!explicit_.empty()) {
        if (k > explicit_.size()) throw IndexOutOfRange("explicit sequence evaluated beyond its length");
        return explicit_[k - 1];
    }
    if (coef_ == 0.0) return 0.0;
    const double kk = static_cast<double>(k);
    double v = coef_;
    if (power_ != 0.0) v *= std::pow(kk, power_);
    if (log_power_ != 0.0) v *= std::pow(std::log1p(kk), log_power_);
    return v;
}

std::string SequenceRule::describe() const {
    std::ostringstream s;
    if (!explicit_.empty()) {
        s << "list[" << explicit_.size() << "]";
    } else {
        s << coef_ << "*k^" << power_ << "*log(k+1)^" << log_power_;
    }
    return s.str();
}

double asymptotic_limit(const std::vector<GrowthTerm>& terms) {
    // Merge equal orders, then the highest order with nonzero coefficient decides.
    std::vector<GrowthTerm> merged;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        auto it = std::find_if(merged.begin(), merged.end(), [&](const GrowthTerm& m) {
            return compare_order(m.power, m.log_power, t.power, t.log_power) == 0;
        });
        if (it == merged.end()) merged.push_back(t);
        else it->coef += t.coef;
    }
    const GrowthTerm* lead = nullptr;
    for (const auto& m : merged) {
        if (m.coef == 0.0) continue;
        if (!lead || compare_order(m.power, m.log_power, lead->power, lead->log_power) > 0) lead = &m;
    }
    if (!lead) return 0.0;
    const int order = compare_order(lead->power, lead->log_power, 0.0, 0.0);
    if (order > 0) return lead->coef > 0 ? kInf : -kInf;
    if (order < 0) return 0.0;
    return lead->coef;
}

bool series_converges(const SequenceRule& rule) {
    if (!rule.symbolic()) {
        throw DomainError("series convergence is only decidable for symbolic rules");
    }
    if (rule.coef() == 0.0) return true;
    if (rule.power() < -1.0) return true;
    return rule.power() == -1.0 && rule.log_power() < -1.0;
}

DiagonalModel::DiagonalModel(SequenceRule alpha, SequenceRule sigma, std::size_t cutoff)
    : alpha_(std::move(alpha)), sigma_(std::move(sigma)), cutoff_(cutoff) {
    if (cutoff_ == 0) throw DomainError("diagonal model cutoff must be >= 1");
    if (sigma_.symbolic()) {
        if (sigma_.coef() < 0.0) throw DomainError("sigma_k must be >= 0");
    } else {
        for (double v : sigma_.explicit_values()) {
            if (v < 0.0) throw DomainError("sigma_k must be >= 0");
        }
    }
}

double zeta(const DiagonalModel& model, std::size_t k, double s, double t, double dw) {
    if (t < s) throw DomainError("zeta needs t >= s");
    const double a = model.alpha()(k);
    const double sg = model.sigma()(k);
    return std::exp(sg * dw + (a - 0.5 * sg * sg) * (t - s));
}

// ---------------------------------------------------------------------------
// Suprema

namespace {

struct Scan {
    double value = -kInf;
    std::size_t argmax = 1;
    double log_argmax = 0.0;
};

template <class F>
Scan scan_sup(F&& f, std::size_t limit) {
    Scan s;
    for (std::size_t k = 1; k <= limit; ++k) {
        const double v = f(k);
        if (v > s.value) {
            s.value = v;
            s.argmax = k;
            s.log_argmax = std::log(static_cast<double>(k));
        }
    }
    return s;
}

// Power-log rules are smooth in log k, so past the exhaustive range the supremum is
// located on a geometric grid in u = log k and refined by golden section. The search
// runs in doubles because the peak can sit far beyond any integer type.
template <class G>
Scan extend_scan(G&& g, std::size_t limit, Scan s) {
    constexpr double kStep = 1.0 / 64.0;
    constexpr double kStop = 700.0;
    const double start = std::log(static_cast<double>(limit));
    double best_u = -1.0;
    double best = s.value;
    for (double u = start + kStep; u <= kStop; u += kStep) {
        const double v = g(std::exp(u));
        if (v > best) {
            best = v;
            best_u = u;
        }
    }
    if (best_u < 0.0) return s;
    double lo = best_u - kStep, hi = best_u + kStep;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
        if (g(std::exp(x1)) < g(std::exp(x2))) lo = x1;
        else hi = x2;
    }
    const double u = 0.5 * (lo + hi);
    const double v = g(std::exp(u));
    s.log_argmax = v > best ? u : best_u;
    s.value = std::max(v, best);
    constexpr double kLargest = 0x1.0p63;
    s.argmax = std::exp(s.log_argmax) < kLargest ? static_cast<std::size_t>(std::llround(std::exp(s.log_argmax)))
                                                  : std::numeric_limits<std::size_t>::max();
    return s;
}

std::size_t evaluable_limit(const DiagonalModel& m, std::size_t scan_limit) {
    std::size_t limit = std::max(scan_limit, m.cutoff());
    if (!m.alpha().symbolic()) limit = std::min(limit, m.alpha().explicit_values().size());
    if (!m.sigma().symbolic()) limit = std::min(limit, m.sigma().explicit_values().size());
    return limit;
}

SupremumReport finish_supremum(const std::vector<GrowthTerm>& terms, bool symbolic, const Scan& scan) {
    SupremumReport r;
    r.determined = symbolic;
    r.argmax = scan.argmax;
    r.log_argmax = scan.log_argmax;
    if (symbolic) {
        const double lim = asymptotic_limit(terms);
        if (lim == kInf) {
            r.finite = false;
            r.value = kInf;
            return r;
        }
        r.value = std::max(scan.value, lim);
    } else {
        r.value = scan.value;
    }
    return r;
}

}  // namespace

L2Report l2_solvability(const DiagonalModel& model, std::size_t scan_limit) {
    const auto& a = model.alpha();
    const auto& sg = model.sigma();
    const bool symbolic = a.symbolic() && sg.symbolic();
    std::vector<GrowthTerm> terms;
    if (symbolic) {
        terms = {{2.0 * a.coef(), a.power(), a.log_power()},
                 {sg.coef() * sg.coef(), 2.0 * sg.power(), 2.0 * sg.log_power()}};
        if (asymptotic_limit(terms) == kInf) {
            return L2Report{false, SupremumReport{false, kInf, 0, true}};
        }
    }
    auto f = [&](std::size_t k) {
        const double s = sg(k);
        return 2.0 * a(k) + s * s;
    };
    const std::size_t limit = evaluable_limit(model, scan_limit);
    Scan scan = scan_sup(f, limit);
    if (symbolic) {
        scan = extend_scan([&](double k) { return 2.0 * a.at(k) + sg.at(k) * sg.at(k); }, limit, scan);
    }
    L2Report out;
    out.sup = finish_supremum(terms, symbolic, scan);
    out.solvable = out.sup.finite;
    return out;
}

namespace {

SupremumReport rho_like(const DiagonalModel& model, double drift_scale, double noise_scale,
                        std::size_t scan_limit) {
    const auto& a = model.alpha();
    const auto& sg = model.sigma();
    const bool symbolic = a.symbolic() && sg.symbolic();
    std::vector<GrowthTerm> terms;
    if (symbolic) {
        terms = {{drift_scale * a.coef(), a.power(), a.log_power()},
                 {-0.5 * drift_scale * sg.coef() * sg.coef(), 2.0 * sg.power(), 2.0 * sg.log_power()},
                 {noise_scale * std::numbers::sqrt2 * sg.coef(), sg.power(), sg.log_power() + 0.5}};
        if (asymptotic_limit(terms) == kInf) return SupremumReport{false, kInf, 0, true};
    }
    auto f = [&](std::size_t k) {
        const double s = sg(k);
        const double log_k = std::log(static_cast<double>(k));
        return (a(k) - 0.5 * s * s) * drift_scale + s * noise_scale * std::sqrt(2.0 * log_k);
    };
    const std::size_t limit = evaluable_limit(model, scan_limit);
    Scan scan = scan_sup(f, limit);
    if (symbolic) {
        scan = extend_scan(
            [&](double k) {
                const double s = sg.at(k);
                return (a.at(k) - 0.5 * s * s) * drift_scale + s * noise_scale * std::sqrt(2.0 * std::log(k));
            },
            limit, scan);
    }
    return finish_supremum(terms, symbolic, scan);
}

}  // namespace

SupremumReport flow_criterion_rho(const DiagonalModel& model, double s, double t, std::size_t scan_limit) {
    if (!(t > s)) throw DomainError("rho(s, t) needs t > s");
    return rho_like(model, std::sqrt(t - s), 1.0, scan_limit);
}

SupremumReport flow_supremum_unscaled(const DiagonalModel& model, double s, double t, std::size_t scan_limit) {
    if (!(t > s)) throw DomainError("flow supremum needs t > s");
    return rho_like(model, t - s, std::sqrt(t - s), scan_limit);
}

// ---------------------------------------------------------------------------
// Classification

std::string_view to_string(SpectrumClass c) {
    switch (c) {
        case SpectrumClass::noncompact_limit: return "noncompact_limit";
        case SpectrumClass::trace_class_as: return "trace_class_as";
        case SpectrumClass::mixed: return "mixed";
        case SpectrumClass::undetermined: return "undetermined";
    }
    return "undetermined";
}

SpectrumClass classify_spectrum(const DiagonalModel& model, double s, double t) {
    const auto& sg = model.sigma();
    if (!sg.symbolic()) return SpectrumClass::undetermined;
    const double limit = asymptotic_limit({{sg.coef(), sg.power(), sg.log_power()}});
    if (limit > 0.0 && limit < kInf) {
        std::ostringstream msg;
        msg << "sigma_k accumulates at " << limit << ", but under the flow criterion only 0 or +inf are possible";
        throw InconsistentModel(msg.str());
    }
    const DiagonalModel zero_drift(SequenceRule::constant(0.0), sg, model.cutoff());
    if (!flow_criterion_rho(zero_drift, s, t).finite) {
        throw InconsistentModel("model violates the alpha = 0 flow criterion (rho = +inf)");
    }
    if (limit == 0.0) {
        // sup sigma_k sqrt(log k) < inf
        const double g = asymptotic_limit({{sg.coef(), sg.power(), sg.log_power() + 0.5}});
        return g == kInf ? SpectrumClass::mixed : SpectrumClass::noncompact_limit;
    }
    // sigma_k / sqrt(log k) -> inf
    const double g = asymptotic_limit({{sg.coef(), sg.power(), sg.log_power() - 0.5}});
    return g == kInf ? SpectrumClass::trace_class_as : SpectrumClass::mixed;
}

// ---------------------------------------------------------------------------
// Normal tails

double normal_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double log_normal_tail(double x) {
    if (x < 37.0) return std::log(normal_tail(x));
    const double inv2 = 1.0 / (x * x);
    const double series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
    return -0.5 * x * x - std::log(x * std::sqrt(2.0 * std::numbers::pi)) + std::log(series);
}

// ---------------------------------------------------------------------------
// Three-series diagnostics

SeriesCurve summarize_series(std::string name, std::vector<double> terms) {
    SeriesCurve c;
    c.name = std::move(name);
    c.partial_sums.resize(terms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        acc += terms[i];
        c.partial_sums[i] = acc;
    }
    // dyadic blocks [2^j, 2^{j+1}) in 1-based k, complete blocks only
    std::vector<double> blocks;
    for (std::size_t lo = 1; 2 * lo - 1 <= terms.size(); lo *= 2) {
        double b = 0.0;
        for (std::size_t k = lo; k < 2 * lo; ++k) b += terms[k - 1];
        blocks.push_back(b);
    }
    for (std::size_t j = 1; j < blocks.size(); ++j) {
        c.block_ratios.push_back(blocks[j - 1] > 0.0 ? blocks[j] / blocks[j - 1] : 0.0);
    }
    const bool tail_zero = !blocks.empty() && blocks.back() == 0.0;
    if (tail_zero) {
        c.convergent = true;
    } else if (c.block_ratios.size() >= kTailRatioSustain) {
        c.convergent = std::all_of(c.block_ratios.end() - static_cast<std::ptrdiff_t>(kTailRatioSustain),
                                   c.block_ratios.end(), [](double r) { return r < kTailRatioThreshold; });
    }
    c.terms = std::move(terms);
    return c;
}

ThreeSeriesReport three_series_diagnostic(const DiagonalModel& model, double s, double t, std::size_t count) {
    if (!(t > s)) throw DomainError("three-series diagnostic needs t > s");
    const double delta_t = t - s;
    const double b = 0.5 * std::sqrt(delta_t);
    std::vector<double> exceed(count), mean(count), var(count);
    ThreeSeriesReport out;
    out.delta.resize(count);
    for (std::size_t k = 1; k <= count; ++k) {
        const double sg = model.sigma()(k);
        const double m = (model.alpha()(k) - 0.5 * sg * sg) * delta_t;  // mean of log zeta
        const double sd = sg * std::sqrt(delta_t);
        double p_exceed, e_y, e_y2;
        if (sd > 0.0) {
            p_exceed = normal_tail(-m / sd);
            e_y = std::exp(m + 0.5 * sd * sd + log_normal_tail((m + sd * sd) / sd));
            e_y2 = std::exp(2.0 * m + 2.0 * sd * sd + log_normal_tail((m + 2.0 * sd * sd) / sd));
        } else {
            p_exceed = m > 0.0 ? 1.0 : 0.0;
            e_y = m > 0.0 ? 0.0 : std::exp(m);
            e_y2 = e_y * e_y;
        }
        const double v = std::max(0.0, e_y2 - e_y * e_y);
        exceed[k - 1] = p_exceed;
        mean[k - 1] = e_y;
        var[k - 1] = v;
        if (v > e_y) out.variance_below_mean = false;
        out.delta[k - 1] = b * b * sg * sg / (2.0 * std::log1p(static_cast<double>(k)));
    }
    out.exceedance = summarize_series("P(zeta_k > 1)", std::move(exceed));
    out.truncated_mean = summarize_series("E Y_k", std::move(mean));
    out.truncated_variance = summarize_series("Var Y_k", std::move(var));
    return out;
}

CriteriaReport criteria_report(const DiagonalModel& model, double s, double t, std::size_t series_count) {
    CriteriaReport r;
    const L2Report l2 = l2_solvability(model);
    r.l2_solvable = l2.solvable;
    r.sup_2a_plus_s2 = l2.sup;
    r.rho = flow_criterion_rho(model, s, t);
    try {
        r.classification = classify_spectrum(model, s, t);
    } catch (const InconsistentModel&) {
        r.classification = SpectrumClass::undetermined;
    }
    if (r.classification == SpectrumClass::trace_class_as && series_count > 0) {
        r.three_series = three_series_diagnostic(model, s, t, series_count);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<double> sample_zetas(const DiagonalModel& model, double s, double t, std::uint64_t seed,
                                 std::size_t count) {
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (count + kChunk - 1) / kChunk;
    const auto pieces = parallel::map(chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(count, lo + kChunk);
        std::vector<double> z(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            z[i - lo] = zeta(model, i + 1, s, t, terminal_increment(seed, i, t - s));
        }
        return z;
    });
    std::vector<double> out;
    out.reserve(count);
    for (const auto& p : pieces) out.insert(out.end(), p.begin(), p.end());
    return out;
}

TraceCurve sample_trace(const DiagonalModel& model, double s, double t, std::uint64_t seed, std::size_t count) {
    const std::vector<double> z = sample_zetas(model, s, t, seed, count);
    TraceCurve c;
    c.partial_sums.resize(count);
    c.analytic_mean.resize(count);
    double acc = 0.0;
    double mean = 0.0;
    for (std::size_t k = 1; k <= count; ++k) {
        acc += z[k - 1];
        mean += std::exp(model.alpha()(k) * (t - s));
        c.partial_sums[k - 1] = acc;
        c.analytic_mean[k - 1] = mean;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Multiplication operators

MultiplicationVerdict multiplication_criteria(const MultiplicationInput& input) {
    MultiplicationVerdict v;
    v.l2_solvable = std::isfinite(input.sum_sq_sup);
    v.mu_total = input.sum_sq_sup;
    if (input.log_sqrt_sum) v.log_sqrt_sufficient = std::isfinite(*input.log_sqrt_sum);
    if (input.sqrt_log_sum) v.sqrt_log_sufficient = std::isfinite(*input.sqrt_log_sum);
    v.flow_exists_sufficient = v.l2_solvable && (v.log_sqrt_sufficient.value_or(false) ||
                                                 v.sqrt_log_sufficient.value_or(false));
    return v;
}

namespace {

// Integral of the rule over [x0, inf) in u = log x by Simpson's rule; the
// integrand c e^{(p+1)u} log(e^u + 1)^q decays exponentially or, for p = -1, polynomially.
double tail_integral(const SequenceRule& rule, double x0) {
    const double p = rule.power();
    const double q = rule.log_power();
    const double u0 = std::log(x0);
    if (p == -1.0) {
        // antiderivative of u^q is closed form; log(x + 1) ~ log x this far out
        return rule.coef() * std::pow(u0, q + 1.0) / (-q - 1.0);
    }
    const double span = 60.0 / (-p - 1.0);
    const int n = 4000;
    const double h = span / n;
    auto g = [&](double u) { return rule.coef() * std::exp((p + 1.0) * u) * std::pow(std::log1p(std::exp(u)), q); };
    double acc = g(u0) + g(u0 + span);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(u0 + i * h);
    return acc * h / 3.0;
}

double symbolic_series_value(const SequenceRule& rule, std::size_t cutoff) {
    if (!series_converges(rule)) return kInf;
    if (rule.coef() == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = cutoff; k >= 1; --k) acc += rule(k);
    return acc + tail_integral(rule, static_cast<double>(cutoff) + 0.5);
}

}  // namespace

MultiplicationInput homogeneous_field_functionals(const SequenceRule& amplitudes, std::size_t cutoff) {
    MultiplicationInput in{};
    if (!amplitudes.symbolic()) {
        double sq = 0.0, ls = 0.0, sl = 0.0;
        const auto& a = amplitudes.explicit_values();
        for (std::size_t k = 1; k <= a.size(); ++k) {
            const double lk = std::log(static_cast<double>(k));
            sq += a[k - 1] * a[k - 1];
            ls += 0.5 * lk * std::abs(a[k - 1]);
            sl += std::abs(a[k - 1]) * std::sqrt(lk);
        }
        return {sq, ls, sl};
    }
    const double c = std::abs(amplitudes.coef());
    const double p = amplitudes.power();
    const double q = amplitudes.log_power();
    in.sum_sq_sup = symbolic_series_value(SequenceRule::power_log(c * c, 2.0 * p, 2.0 * q), cutoff);
    // log(sqrt k) ~ (1/2) log(k+1) and sqrt(log k) ~ sqrt(log(k+1)) share their series behaviour
    in.log_sqrt_sum = symbolic_series_value(SequenceRule::power_log(0.5 * c, p, q + 1.0), cutoff);
    in.sqrt_log_sum = symbolic_series_value(SequenceRule::power_log(c, p, q + 0.5), cutoff);
    return in;
}

MultiplicationInput brownian_sheet_functionals(std::size_t dimension, double length) {
    if (!(length > 0.0)) throw DomainError("sheet domain length must be > 0");
    const double vol = std::isfinite(length) ? std::pow(length, static_cast<double>(dimension)) : kInf;
    return MultiplicationInput{vol, std::nullopt, std::nullopt};
}

}  // namespace stochflow
