#include "stochflow/schatten.hpp"

#include "stochflow/errors.hpp"
#include "stochflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace stochflow {

SpectrumModel SpectrumModel::values(std::vector<double> eigenvalues) {
    if (eigenvalues.empty()) throw DomainError("spectrum needs at least one eigenvalue");
    for (double v : eigenvalues) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("eigenvalues must be finite and >= 0");
    }
    std::sort(eigenvalues.begin(), eigenvalues.end());
    SpectrumModel m;
    m.kind_ = Kind::explicit_list;
    m.eigenvalues_ = std::move(eigenvalues);
    return m;
}

SpectrumModel SpectrumModel::power_rule(double scale, double power, std::size_t cutoff) {
    if (!(scale > 0.0) || !(power >= 1.0)) throw DomainError("power spectrum needs scale > 0 and power >= 1");
    if (cutoff == 0) throw DomainError("power spectrum needs cutoff >= 1");
    SpectrumModel m;
    m.kind_ = Kind::power;
    m.scale_ = scale;
    m.power_ = power;
    m.eigenvalues_.resize(cutoff);
    for (std::size_t j = 1; j <= cutoff; ++j) {
        m.eigenvalues_[j - 1] = scale * std::pow(static_cast<double>(j), power);
    }
    return m;
}

SpectrumModel SpectrumModel::laplacian2d(std::size_t n_max) {
    if (n_max == 0) throw DomainError("laplacian spectrum needs n_max >= 1");
    SpectrumModel m;
    m.kind_ = Kind::laplacian2d;
    m.n_max_ = n_max;
    m.eigenvalues_.reserve(n_max * n_max);
    for (std::size_t k = 1; k <= n_max; ++k) {
        for (std::size_t n = 1; n <= n_max; ++n) {
            m.eigenvalues_.push_back(static_cast<double>(k * k + n * n));
        }
    }
    std::sort(m.eigenvalues_.begin(), m.eigenvalues_.end());
    return m;
}

SpectrumModel dirichlet_laplacian_spectrum(std::size_t n_max) { return SpectrumModel::laplacian2d(n_max); }

double SpectrumModel::tail_bound(double t, double p) const {
    const double b = p * t;
    switch (kind_) {
        case Kind::explicit_list:
            return 0.0;
        case Kind::power: {
            // integral comparison: sum_{j > J} e^{-b c j^a} <= e^{-b c J^a} / (a b c J^{a-1})
            const double jj = static_cast<double>(eigenvalues_.size());
            const double bc = b * scale_;
            return std::exp(-bc * std::pow(jj, power_)) / (power_ * bc * std::pow(jj, power_ - 1.0));
        }
        case Kind::laplacian2d: {
            // 2 * (sum_{n >= 1} e^{-b n^2}) * (sum_{k > n_max} e^{-b k^2}), both bounded by Gaussian integrals
            const double half_width = 0.5 * std::sqrt(std::numbers::pi / b);
            const double tail_1d = half_width * std::erfc(static_cast<double>(n_max_) * std::sqrt(b));
            return 2.0 * half_width * tail_1d;
        }
    }
    return 0.0;
}

TruncatedOperator SpectrumModel::generator() const {
    std::vector<double> diag(eigenvalues_.size());
    std::transform(eigenvalues_.begin(), eigenvalues_.end(), diag.begin(), [](double v) { return -v; });
    return TruncatedOperator::diagonal(diag);
}

SchattenValue semigroup_schatten_norm(const SpectrumModel& spec, double t, double p) {
    if (!(t > 0.0)) throw DomainError("semigroup norm needs t > 0");
    if (!(p >= 1.0)) throw DomainError("Schatten exponent must be >= 1");
    // factor out the slowest mode so nothing underflows
    const double lead = spec.eigenvalues().front();
    double sum = 0.0;
    for (double v : spec.eigenvalues()) sum += std::exp(-p * t * (v - lead));
    return {std::exp(-t * lead) * std::pow(sum, 1.0 / p), spec.tail_bound(t, p)};
}

std::size_t laplacian_cutoff_for(double t, double p, double tolerance) {
    if (!(t > 0.0) || !(p >= 1.0) || !(tolerance > 0.0)) throw DomainError("invalid laplacian cutoff request");
    const double b = p * t;
    double line = 0.0;  // sum_{n >= 1} e^{-b n^2}, accumulated until negligible
    for (std::size_t n = 1;; ++n) {
        const double term = std::exp(-b * static_cast<double>(n * n));
        line += term;
        if (term < 1e-18 * line) break;
    }
    const double total = line * line;
    const double half_width = 0.5 * std::sqrt(std::numbers::pi / b);
    for (std::size_t n = 1;; ++n) {
        const double tail = 2.0 * half_width * half_width * std::erfc(static_cast<double>(n) * std::sqrt(b));
        if (tail < tolerance * total) return n;
    }
}

std::string_view to_string(SmoothingVerdict v) {
    switch (v) {
        case SmoothingVerdict::satisfied: return "satisfied";
        case SmoothingVerdict::violated: return "violated";
        case SmoothingVerdict::undetermined: return "undetermined";
    }
    return "undetermined";
}

std::vector<double> log_spaced(double t_min, double t_max, std::size_t count) {
    if (!(t_min > 0.0) || !(t_max > t_min) || count < 2) throw DomainError("invalid log-spaced range");
    std::vector<double> out(count);
    const double a = std::log(t_min);
    const double step = (std::log(t_max) - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + step * static_cast<double>(i));
    out.front() = t_min;
    out.back() = t_max;
    return out;
}

SmoothingReport check_smoothing(const SpectrumModel& spec, double p, const std::vector<double>& t_grid) {
    if (t_grid.size() < 8) throw DomainError("smoothing fit needs at least 8 times");
    for (double t : t_grid) {
        if (!(t > 0.0) || t > 1.0) throw DomainError("smoothing times must lie in (0, 1]");
    }
    SmoothingReport r;
    r.p = p;
    r.times = t_grid;
    const auto [lo, hi] = std::minmax_element(t_grid.begin(), t_grid.end());
    r.fit_range = {*lo, *hi};
    std::vector<double> x, y;
    for (double t : t_grid) {
        const double n = semigroup_schatten_norm(spec, t, p).norm;
        r.norms.push_back(n);
        x.push_back(std::log(1.0 / t));
        y.push_back(std::log(n));
    }
    r.truncation_dominated = std::exp(-p * spec.largest() * r.fit_range.first) > 1e-3;
    stats::LinearFit fit;
    try {
        fit = stats::linear_fit(x, y);
    } catch (const Error&) {
        return r;
    }
    r.fitted_gamma = fit.slope;
    r.gamma_stderr = fit.slope_se;
    r.intercept = fit.intercept;
    r.r_squared = fit.r_squared;
    if (!(fit.r_squared >= 0.99)) return r;
    r.satisfies_condition = fit.slope + 2.0 * fit.slope_se < 0.5;
    r.verdict = r.satisfies_condition ? SmoothingVerdict::satisfied : SmoothingVerdict::violated;
    return r;
}

// ---------------------------------------------------------------------------
// Picard iteration

namespace {

struct Segment {
    std::vector<Matrix> frames;
    std::vector<double> residuals;
    std::size_t segments = 1;
};

struct PicardProblem {
    const Eigen::VectorXd& lambda;
    const OperatorFamily& family;
    const WienerPaths& paths;
    double p;
    const PicardOptions& options;
};

// Runs the iteration on grid indices [lo, hi]; frame 0 is the identity at t_lo.
// Returns false together with the last contraction factor on divergence.
bool iterate_segment(const PicardProblem& pb, std::size_t lo, std::size_t hi, Segment& out, double& factor) {
    const std::size_t steps = hi - lo;
    const std::size_t dim = pb.family.dim();
    const double dt = pb.paths.grid().dt();
    const Eigen::ArrayXd step_decay = (-dt * pb.lambda.array()).exp();

    std::vector<Matrix> semigroup(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        const Eigen::VectorXd d = (-(dt * static_cast<double>(i)) * pb.lambda.array()).exp().matrix();
        semigroup[i] = d.asDiagonal();
    }

    std::vector<Matrix> psi = semigroup;  // psi_0(t) = S(t - t_lo)
    std::vector<Matrix> next(steps + 1);
    const bool has_drift = !pb.family.drift().matrix().isZero(0.0);
    out.residuals.clear();
    int growth = 0;
    factor = 0.0;

    for (std::size_t m = 0; m < pb.options.max_iterations; ++m) {
        Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        next[0] = semigroup[0];
        for (std::size_t i = 0; i < steps; ++i) {
            Matrix g = has_drift ? Matrix(pb.family.drift().matrix() * psi[i] * dt) : Matrix(Matrix::Zero(acc.rows(), acc.cols()));
            for (std::size_t k = 0; k < pb.family.noise_count(); ++k) {
                g.noalias() += pb.family.noise()[k].matrix() * psi[i] * pb.paths.increment(k, lo + i);
            }
            acc = step_decay.matrix().asDiagonal() * (acc + g);
            next[i + 1] = semigroup[i + 1] + acc;
        }
        double residual = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i <= steps; ++i) {
            if (!next[i].allFinite()) {
                residual = std::numeric_limits<double>::infinity();
                break;
            }
            residual = std::max(residual, schatten_norm(Matrix(next[i] - psi[i]), pb.p));
            scale = std::max(scale, schatten_norm(next[i], pb.p));
        }
        std::swap(psi, next);
        if (!out.residuals.empty() && out.residuals.back() > 0.0) {
            factor = residual / out.residuals.back();
            growth = factor > 1.0 ? growth + 1 : 0;
        }
        out.residuals.push_back(residual);
        if (!std::isfinite(residual) || growth >= 3) return false;
        if (residual <= pb.options.relative_tolerance * scale) break;
    }
    out.frames = std::move(psi);
    return true;
}

Segment solve_segment(const PicardProblem& pb, std::size_t lo, std::size_t hi, int depth) {
    Segment seg;
    double factor = 0.0;
    if (iterate_segment(pb, lo, hi, seg, factor)) return seg;
    if (depth >= pb.options.max_depth || hi - lo < 2) {
        std::ostringstream msg;
        msg << "Picard iteration diverged on a horizon of " << (hi - lo) << " steps (empirical contraction factor "
            << factor << ")";
        throw PicardDivergence(msg.str(), factor);
    }
    // flow property: X(t_lo, t) = X(t_mid, t) X(t_lo, t_mid) for t >= t_mid
    const std::size_t mid = lo + (hi - lo) / 2;
    Segment first = solve_segment(pb, lo, mid, depth + 1);
    Segment second = solve_segment(pb, mid, hi, depth + 1);
    Segment joined;
    joined.frames = std::move(first.frames);
    const Matrix pivot = joined.frames.back();
    for (std::size_t i = 1; i < second.frames.size(); ++i) joined.frames.push_back(second.frames[i] * pivot);
    joined.residuals = first.residuals;
    if (second.residuals.size() > joined.residuals.size()) joined.residuals.resize(second.residuals.size(), 0.0);
    for (std::size_t i = 0; i < second.residuals.size(); ++i) {
        joined.residuals[i] = std::max(joined.residuals[i], second.residuals[i]);
    }
    joined.segments = first.segments + second.segments;
    return joined;
}

}  // namespace

PicardResult picard_mild_solver(const SpectrumModel& spec, const OperatorFamily& family, const WienerPaths& paths,
                                double p, const PicardOptions& options) {
    if (!(p >= 1.0)) throw DomainError("Schatten exponent must be >= 1");
    if (spec.size() != family.dim()) {
        throw DimensionMismatch("spectrum size and family dimension differ");
    }
    if (paths.count() < family.noise_count()) {
        throw PathShortfall("fewer Wiener paths than noise operators");
    }
    if (options.max_iterations == 0) throw DomainError("Picard iteration needs max_iterations >= 1");
    const Eigen::VectorXd lambda = Eigen::Map<const Eigen::VectorXd>(
        spec.eigenvalues().data(), static_cast<Eigen::Index>(spec.size()));
    const PicardProblem pb{lambda, family, paths, p, options};
    Segment seg = solve_segment(pb, 0, paths.grid().steps(), 0);

    PicardResult r{FlowSample{paths.grid(), {}, SolverTag::picard_schatten, paths.seed(), paths.origin()},
                   std::move(seg.residuals), seg.segments, 0.0};
    r.flow.frames.reserve(seg.frames.size());
    for (auto& f : seg.frames) r.flow.frames.emplace_back(std::move(f));
    r.contraction = residual_ratio(r.residuals, r.residuals.size() / 2);
    return r;
}

double residual_ratio(const std::vector<double>& residuals, std::size_t burn_in) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t m = burn_in + 1; m < residuals.size(); ++m) {
        if (residuals[m - 1] > 0.0 && residuals[m] > 0.0) {
            sum += residuals[m] / residuals[m - 1];
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace stochflow
