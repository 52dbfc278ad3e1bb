#include "experiments.hpp"

#include "stochflow/csv.hpp"
#include "stochflow/diagonal.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/schatten.hpp"
#include "stochflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace stochflow::detail {

namespace {

using Columns = std::vector<std::vector<double>>;

struct Context {
    const ExperimentConfig& cfg;
    std::filesystem::path dir;
    ExperimentResult result;

    void write(const std::string& suffix, const std::vector<std::string>& header, const Columns& columns) {
        const auto path = dir / (cfg.experiment + "_" + suffix + ".csv");
        std::ofstream out(path, std::ios::binary);
        csv::write_columns(out, header, columns);
        result.files.push_back(path);
    }
    void check(Criterion c) { result.criteria.push_back(std::move(c)); }
    void seed(const std::string& name, std::uint64_t value) { result.seeds.emplace_back(name, value); }
};

EulerScheme scheme_of(const ExperimentConfig& cfg) {
    return cfg.solver.euler_scheme == "plain" ? EulerScheme::plain : EulerScheme::exponential;
}

TimeGrid grid_with(const ExperimentConfig& cfg, std::size_t steps) { return TimeGrid(cfg.grid.s, cfg.grid.t_end, steps); }

double gap(const TruncatedOperator& a, const TruncatedOperator& b) { return operator_norm(Matrix(a.matrix() - b.matrix())); }

SequenceRule rule_of(const std::vector<double>& r) { return SequenceRule::power_log(r[0], r[1], r[2]); }

/// Mean per ladder point of a per-path statistic, plus its log-log slope against dt.
struct LadderFit {
    std::vector<double> dt, mean, se;
    stats::LinearFit fit;
};

LadderFit ladder_fit(const ExperimentConfig& cfg, std::size_t noise_count,
                     const std::function<double(const WienerPaths&)>& statistic) {
    LadderFit out;
    for (std::size_t n : cfg.grid.ladder) {
        const MonteCarloSetup setup{grid_with(cfg, n), noise_count, cfg.monte_carlo.n_paths, cfg.monte_carlo.seed};
        const auto values =
            parallel::map(setup.n_paths, [&](std::size_t i) { return statistic(replicate_paths(setup, i)); });
        const auto e = stats::mean_with_se(values);
        out.dt.push_back(setup.grid.dt());
        out.mean.push_back(e.value);
        out.se.push_back(e.se);
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < out.dt.size(); ++i) {
        x.push_back(std::log(out.dt[i]));
        y.push_back(std::log(out.mean[i]));
    }
    out.fit = stats::linear_fit(x, y);
    return out;
}

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

/// Roughly log-spaced 1-based indices up to n, always including n.
std::vector<std::size_t> log_indices(std::size_t n, std::size_t per_decade = 40) {
    std::vector<std::size_t> out;
    double x = 1.0;
    const double step = std::pow(10.0, 1.0 / static_cast<double>(per_decade));
    while (x < static_cast<double>(n)) {
        const auto k = static_cast<std::size_t>(std::llround(x));
        if (out.empty() || k > out.back()) out.push_back(k);
        x *= step;
    }
    if (out.empty() || out.back() != n) out.push_back(n);
    return out;
}

// ---------------------------------------------------------------------------

void cross_solver(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const OperatorFamily family = commuting_family(m.dim, m.noise_count, m.bound, m.drift_norm, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);

    const WienerPaths paths = sample_wiener(grid_with(c, c.grid.steps), m.noise_count, c.monte_carlo.seed);
    const FlowSample euler = euler_flow(std::nullopt, family, paths, scheme_of(c));
    const FlowSample chaos =
        chaos_flow(family, paths, ChaosConfig{static_cast<int>(c.solver.chaos_order), 0, static_cast<int>(c.solver.moment_l)});
    const FlowSample exact = commutative_ito_flow(family, paths);
    const double eu_ch = gap(euler.terminal(), chaos.terminal());
    const double eu_ex = gap(euler.terminal(), exact.terminal());
    const double ch_ex = gap(chaos.terminal(), exact.terminal());
    ctx.write("terminal", {"pair_index", "gap"}, {{0, 1, 2}, {eu_ch, eu_ex, ch_ex}});
    ctx.check(Criterion::within("euler_vs_chaos_gap", eu_ch, std::nullopt, 1e-2));
    ctx.check(Criterion::within("euler_vs_closed_form_gap", eu_ex, std::nullopt, 1e-2));
    ctx.check(Criterion::within("chaos_vs_closed_form_gap", ch_ex, std::nullopt, 1e-2));

    const auto ladder = ladder_fit(c, m.noise_count, [&](const WienerPaths& p) {
        const FlowSample e = euler_flow(std::nullopt, family, p, scheme_of(c));
        const FlowSample x = commutative_ito_flow(family, p);
        return gap(e.terminal(), x.terminal());
    });
    ctx.write("ladder", {"steps", "dt", "mean_gap", "se"},
              {as_doubles(c.grid.ladder), ladder.dt, ladder.mean, ladder.se});
    ctx.check(Criterion::within("euler_gap_slope", ladder.fit.slope, 0.4, 0.6));
}

void chaos_convergence(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const OperatorFamily family = random_family(m.dim, m.noise_count, m.bound, m.drift_norm, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);
    const WienerPaths paths = sample_wiener(grid_with(c, c.grid.steps), m.noise_count, c.monte_carlo.seed);
    const FlowSample euler = euler_flow(std::nullopt, family, paths, EulerScheme::plain);
    const double delta = c.grid.t_end - c.grid.s;
    const int moment_l = static_cast<int>(c.solver.moment_l);
    std::vector<double> orders, gaps, bounds;
    for (int n = 1; n <= static_cast<int>(c.solver.chaos_order); ++n) {
        const FlowSample chaos = chaos_flow(family, paths, ChaosConfig{n, 0, moment_l});
        orders.push_back(n);
        gaps.push_back(gap(chaos.terminal(), euler.terminal()));
        bounds.push_back(chaos_tail_bound(family_bound(family) + operator_norm(family.drift()), delta, moment_l, n));
    }
    ctx.write("orders", {"order", "gap_to_euler", "tail_bound"}, {orders, gaps, bounds});
    ctx.check(Criterion::within("final_order_gap", gaps.back(), std::nullopt, 1e-3));
    const std::size_t tail = std::min<std::size_t>(4, gaps.size());
    bool decreasing = true;
    for (std::size_t i = gaps.size() - tail + 1; i < gaps.size(); ++i) decreasing = decreasing && gaps[i] < gaps[i - 1];
    ctx.check(Criterion::flag("gap_decreasing_over_last_orders", decreasing));
}

void inverse_flow_convergence(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const OperatorFamily family = random_family(m.dim, m.noise_count, m.bound, m.drift_norm, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);
    const auto ladder = ladder_fit(c, m.noise_count, [&](const WienerPaths& p) {
        const FlowSample y = euler_flow(std::nullopt, family, p, EulerScheme::plain);
        const FlowSample z = inverse_flow(family, p);
        const Matrix product = z.terminal().matrix().transpose() * y.terminal().matrix();
        return operator_norm(Matrix(product - Matrix::Identity(product.rows(), product.cols())));
    });
    ctx.write("ladder", {"steps", "dt", "mean_defect", "se"},
              {as_doubles(c.grid.ladder), ladder.dt, ladder.mean, ladder.se});
    ctx.check(Criterion::flag("family_noncommuting", family.first_noncommuting_pair().first >= 0));
    ctx.check(Criterion::within("defect_slope", ladder.fit.slope, 0.4, 0.6));
}

void moment_bound(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const OperatorFamily family = random_family(m.dim, m.noise_count, m.bound, m.drift_norm, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);
    const MonteCarloSetup setup{grid_with(c, c.grid.steps), m.noise_count, c.monte_carlo.n_paths, c.monte_carlo.seed};
    const EulerScheme scheme = scheme_of(c);
    const FlowBuilder build = [&](const WienerPaths& p) { return euler_flow(std::nullopt, family, p, scheme); };
    const int L = static_cast<int>(c.solver.moment_l);
    const MomentReport one = holder_slope(build, setup, L, c.grid.ladder);
    const MomentReport two = holder_slope_two_parameter(build, setup, L, c.grid.ladder);
    ctx.write("increments", {"increment", "moment", "se", "moment_two_parameter", "se_two_parameter"},
              {one.increments, one.moments, one.std_errors, two.moments, two.std_errors});
    ctx.check(Criterion::within("holder_slope", one.slope, one.threshold, std::nullopt));
    ctx.check(Criterion::within("holder_slope_two_parameter", two.slope, two.threshold, std::nullopt));
}

void diagonal_moments(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const double delta = c.grid.t_end - c.grid.s;
    Columns cols(9);
    for (std::size_t p = 0; p < m.alpha.size(); ++p) {
        const DiagonalModel model(SequenceRule::constant(m.alpha[p]), SequenceRule::constant(m.sigma[p]), 1);
        const std::uint64_t seed = rng::derive_seed(c.monte_carlo.seed, p);
        ctx.seed("pair_" + std::to_string(p), seed);
        const auto z = sample_zetas(model, c.grid.s, c.grid.t_end, seed, c.monte_carlo.n_paths);
        std::vector<double> z2(z.size());
        std::transform(z.begin(), z.end(), z2.begin(), [](double v) { return v * v; });
        const auto first = stats::mean_with_se(z);
        const auto second = stats::mean_with_se(z2);
        const double mean_exact = std::exp(m.alpha[p] * delta);
        const double second_exact = std::exp((2.0 * m.alpha[p] + m.sigma[p] * m.sigma[p]) * delta);
        const double z_first = std::abs(first.value - mean_exact) / first.se;
        const double z_second = std::abs(second.value - second_exact) / second.se;
        const std::string tag = "alpha=" + csv::format_double(m.alpha[p]) + ",sigma=" + csv::format_double(m.sigma[p]);
        ctx.check(Criterion::within("mean_zscore[" + tag + "]", z_first, std::nullopt, 3.0));
        ctx.check(Criterion::within("second_moment_zscore[" + tag + "]", z_second, std::nullopt, 3.0));
        const double row[9] = {m.alpha[p], m.sigma[p], first.value, first.se, mean_exact,
                               second.value, second.se, second_exact, static_cast<double>(z.size())};
        for (std::size_t i = 0; i < 9; ++i) cols[i].push_back(row[i]);
    }
    ctx.write("pairs",
              {"alpha", "sigma", "mean", "mean_se", "mean_exact", "second_moment", "second_moment_se",
               "second_moment_exact", "draws"},
              cols);
}

void skorokhod_vs_trace(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const double delta = c.grid.t_end - c.grid.s;
    const std::uint64_t seed = c.monte_carlo.seed;
    ctx.seed("growth", seed);
    const GrowthCurve growth = skorokhod_growth(m.skorokhod_sigma, delta, c.grid.k_ladder, c.monte_carlo.n_seeds, seed);
    // sigma_k = 1/k has a finite flow criterion, so its curve plateaus
    const DiagonalModel control(SequenceRule::constant(0.0), SequenceRule::power_log(1.0, -1.0, 0.0),
                                c.grid.k_ladder.back());
    const GrowthCurve flat = growth_curve(control, delta, c.grid.k_ladder, c.monte_carlo.n_seeds, seed, 0.0);
    ctx.write("growth", {"K", "median_max", "envelope", "control_median_max"},
              {as_doubles(growth.k), growth.median_max, growth.envelope, flat.median_max});
    ctx.check(Criterion::flag("median_max_monotone", growth.monotone));
    ctx.check(Criterion::within("median_max_growth_ratio", growth.growth_ratio, 5.0, std::nullopt));
    ctx.check(Criterion::within("envelope_constant", growth.envelope_constant, kEnvelopeLow, kEnvelopeHigh));
    ctx.check(Criterion::within("control_growth_ratio", flat.growth_ratio, std::nullopt, 1.5));

    const DiagonalModel trace_model(rule_of(m.alpha_rule), rule_of(m.sigma_rule), m.cutoff);
    const std::uint64_t trace_seed = rng::derive_seed(seed, 1u << 20);
    ctx.seed("trace", trace_seed);
    const TraceCurve trace = sample_trace(trace_model, c.grid.s, c.grid.t_end, trace_seed, m.cutoff);
    const std::size_t k = m.cutoff;
    const std::size_t decade = std::max<std::size_t>(1, k / 10);
    const double last = trace.partial_sums[k - 1];
    const double change = std::abs(last - trace.partial_sums[decade - 1]) / std::abs(last);
    Columns cols(3);
    for (std::size_t i : log_indices(k)) {
        cols[0].push_back(static_cast<double>(i));
        cols[1].push_back(trace.partial_sums[i - 1]);
        cols[2].push_back(trace.analytic_mean[i - 1]);
    }
    ctx.write("trace", {"k", "partial_sum", "analytic_mean"}, cols);
    ctx.check(Criterion::within("trace_relative_change_last_decade", change, std::nullopt, 1e-4));
    ctx.check(Criterion::within("analytic_mean_over_K", trace.analytic_mean[k - 1] / static_cast<double>(k),
                                1.0 - 1e-9, 1.0 + 1e-9));
}

void three_series(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const DiagonalModel model(rule_of(m.alpha_rule), rule_of(m.sigma_rule), m.cutoff);
    const ThreeSeriesReport r = three_series_diagnostic(model, c.grid.s, c.grid.t_end, m.cutoff);
    Columns cols(5);
    for (std::size_t i : log_indices(m.cutoff)) {
        cols[0].push_back(static_cast<double>(i));
        cols[1].push_back(r.exceedance.partial_sums[i - 1]);
        cols[2].push_back(r.truncated_mean.partial_sums[i - 1]);
        cols[3].push_back(r.truncated_variance.partial_sums[i - 1]);
        cols[4].push_back(r.delta[i - 1]);
    }
    ctx.write("partial_sums", {"k", "exceedance", "truncated_mean", "truncated_variance", "delta"}, cols);
    Columns ratios(4);
    for (std::size_t j = 0; j < r.exceedance.block_ratios.size(); ++j) {
        ratios[0].push_back(static_cast<double>(j + 1));
        ratios[1].push_back(r.exceedance.block_ratios[j]);
        ratios[2].push_back(r.truncated_mean.block_ratios[j]);
        ratios[3].push_back(r.truncated_variance.block_ratios[j]);
    }
    ctx.write("block_ratios", {"block", "exceedance", "truncated_mean", "truncated_variance"}, ratios);
    ctx.check(Criterion::flag("exceedance_series_converges", r.exceedance.convergent));
    ctx.check(Criterion::flag("truncated_mean_series_converges", r.truncated_mean.convergent));
    ctx.check(Criterion::flag("truncated_variance_series_converges", r.truncated_variance.convergent));
    ctx.check(Criterion::flag("variance_below_mean_every_k", r.variance_below_mean));
}

void schatten_gamma(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const double p_min = *std::min_element(m.p.begin(), m.p.end());
    const std::size_t n_max = m.n_max ? m.n_max : laplacian_cutoff_for(c.grid.t_min, p_min);
    const SpectrumModel spec = dirichlet_laplacian_spectrum(n_max);
    const auto times = log_spaced(c.grid.t_min, c.grid.t_max, c.grid.t_points);
    Columns curves(1, times);
    std::vector<std::string> header{"t"};
    Columns fits(6);
    for (double p : m.p) {
        const SmoothingReport r = check_smoothing(spec, p, times);
        curves.push_back(r.norms);
        header.push_back("norm_p" + csv::format_double(p));
        const double row[6] = {p, r.fitted_gamma, r.gamma_stderr, r.r_squared,
                               r.verdict == SmoothingVerdict::satisfied ? 1.0 : 0.0,
                               r.truncation_dominated ? 1.0 : 0.0};
        for (std::size_t i = 0; i < 6; ++i) fits[i].push_back(row[i]);
        const std::string tag = "[p=" + csv::format_double(p) + "]";
        if (p > 2.0) {
            ctx.check(Criterion::within("gamma" + tag, r.fitted_gamma, 1.0 / p - 0.05, 1.0 / p + 0.05));
        }
        const SmoothingVerdict expected = p > 2.0 ? SmoothingVerdict::satisfied : SmoothingVerdict::violated;
        ctx.check(Criterion::flag("condition_verdict_" + std::string(to_string(expected)) + tag, r.verdict == expected));
        ctx.check(Criterion::flag("not_truncation_dominated" + tag, !r.truncation_dominated));
    }
    ctx.write("norms", header, curves);
    ctx.write("fits", {"p", "gamma", "gamma_se", "r_squared", "satisfied", "truncation_dominated"}, fits);
}

void picard(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const SpectrumModel spec = dirichlet_laplacian_spectrum(m.n_max ? m.n_max : 3);
    const OperatorFamily family = random_family(spec.size(), m.noise_count, m.bound, m.drift_norm, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);
    const double p = m.p.front();
    const MonteCarloSetup setup{grid_with(c, c.grid.steps), m.noise_count, c.monte_carlo.n_paths, c.monte_carlo.seed};
    const PicardOptions options{c.solver.picard_iterations, c.solver.picard_tolerance, 6};
    constexpr std::size_t kBurnIn = 3;
    struct Outcome {
        std::vector<double> residuals;
        double ratio;
        double gap;
    };
    const auto outcomes = parallel::map(setup.n_paths, [&](std::size_t i) {
        const WienerPaths paths = replicate_paths(setup, i);
        const PicardResult r = picard_mild_solver(spec, family, paths, p, options);
        const FlowSample euler = euler_flow(spec.generator(), family, paths, EulerScheme::exponential);
        double worst = 0.0;
        for (std::size_t j = 0; j < euler.frames.size(); ++j) {
            worst = std::max(worst, schatten_norm(Matrix(r.flow.frames[j].matrix() - euler.frames[j].matrix()), p));
        }
        return Outcome{r.residuals, residual_ratio(r.residuals, kBurnIn), worst};
    });
    double worst_ratio = 0.0, worst_gap = 0.0;
    std::size_t longest = 0;
    for (const auto& o : outcomes) {
        worst_ratio = std::max(worst_ratio, o.ratio);
        worst_gap = std::max(worst_gap, o.gap);
        longest = std::max(longest, o.residuals.size());
    }
    Columns cols(1);
    std::vector<std::string> header{"iteration"};
    for (std::size_t it = 0; it < longest; ++it) cols[0].push_back(static_cast<double>(it + 1));
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto r = outcomes[i].residuals;
        r.resize(longest, 0.0);
        cols.push_back(r);
        header.push_back("residual_path" + std::to_string(i));
    }
    ctx.write("residuals", header, cols);
    ctx.check(Criterion::within("residual_ratio_after_burn_in", worst_ratio, std::nullopt, 0.9));
    ctx.check(Criterion::within("max_frame_gap_to_euler", worst_gap, std::nullopt, 10.0 * std::sqrt(setup.grid.dt())));
}

void orthogonality(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto& m = c.model;
    const OperatorFamily family = skew_commuting_family(m.dim, m.noise_count, m.bound, m.family_seed);
    ctx.seed("family", m.family_seed);
    ctx.seed("paths", c.monte_carlo.seed);
    const MonteCarloSetup setup{grid_with(c, c.grid.steps), m.noise_count, c.monte_carlo.n_paths, c.monte_carlo.seed};
    const auto defects = parallel::map(setup.n_paths, [&](std::size_t i) {
        const FlowSample q = commutative_strat_flow(family, replicate_paths(setup, i));
        double worst = 0.0;
        for (const auto& f : q.frames) {
            const Matrix g = f.matrix().transpose() * f.matrix();
            worst = std::max(worst, operator_norm(Matrix(g - Matrix::Identity(g.rows(), g.cols()))));
        }
        return worst;
    });
    std::vector<double> index(defects.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<double>(i);
    ctx.write("defects", {"path", "max_orthogonality_defect"}, {index, defects});
    ctx.check(Criterion::within("max_orthogonality_defect", *std::max_element(defects.begin(), defects.end()),
                                std::nullopt, 1e-9));
}

}  // namespace

ExperimentResult run_body(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    static const std::map<std::string, std::function<void(Context&)>> table{
        {"cross_solver", cross_solver},
        {"chaos_convergence", chaos_convergence},
        {"inverse_flow_convergence", inverse_flow_convergence},
        {"moment_bound", moment_bound},
        {"diagonal_moments", diagonal_moments},
        {"skorokhod_vs_trace", skorokhod_vs_trace},
        {"three_series", three_series},
        {"schatten_gamma", schatten_gamma},
        {"picard", picard},
        {"orthogonality", orthogonality},
    };
    const auto it = table.find(cfg.experiment);
    if (it == table.end()) throw SchemaError("experiment: unknown experiment '" + cfg.experiment + "'");
    Context ctx{cfg, dir, {}};
    ctx.result.experiment = cfg.experiment;
    it->second(ctx);
    return ctx.result;
}

}  // namespace stochflow::detail
