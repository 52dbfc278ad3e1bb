#include "stochflow/harness.hpp"

#include "experiments.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace stochflow {

namespace {

Matrix gaussian_matrix(std::size_t dim, std::uint64_t seed, std::uint64_t member) {
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng::standard_normal(
                seed, {rng::Stream::model, member, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        }
    }
    return m;
}

Matrix rescaled(const Matrix& m, double target) {
    const double n = operator_norm(m);
    return n > 0.0 ? Matrix(m * (target / n)) : m;
}

Matrix random_orthogonal(std::size_t dim, std::uint64_t seed) {
    const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(dim, seed, 1000));
    return qr.householderQ();
}

}  // namespace

OperatorFamily random_family(std::size_t dim, std::size_t noise_count, double bound, double drift_norm,
                             std::uint64_t seed) {
    if (noise_count == 0) throw DomainError("random family needs at least one noise operator");
    std::vector<TruncatedOperator> noise;
    for (std::size_t k = 1; k <= noise_count; ++k) {
        noise.emplace_back(rescaled(gaussian_matrix(dim, seed, k), bound / static_cast<double>(noise_count)));
    }
    const Matrix drift = drift_norm > 0.0 ? rescaled(gaussian_matrix(dim, seed, 0), drift_norm)
                                          : Matrix(Matrix::Zero(static_cast<Eigen::Index>(dim),
                                                                static_cast<Eigen::Index>(dim)));
    return OperatorFamily(TruncatedOperator(drift), std::move(noise));
}

OperatorFamily commuting_family(std::size_t dim, std::size_t noise_count, double bound, double drift_norm,
                                std::uint64_t seed) {
    if (noise_count == 0) throw DomainError("commuting family needs at least one noise operator");
    const Matrix q = random_orthogonal(dim, seed);
    auto member = [&](std::uint64_t index, double target) {
        Vector d(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            d(static_cast<Eigen::Index>(i)) =
                rng::standard_normal(seed, {rng::Stream::model, index, 1, static_cast<std::uint32_t>(i)});
        }
        const double top = d.cwiseAbs().maxCoeff();
        if (top > 0.0) d *= target / top;
        return Matrix(q * d.asDiagonal() * q.transpose());
    };
    std::vector<TruncatedOperator> noise;
    for (std::size_t k = 1; k <= noise_count; ++k) {
        noise.emplace_back(member(k, bound / static_cast<double>(noise_count)));
    }
    return OperatorFamily(TruncatedOperator(member(0, drift_norm)), std::move(noise));
}

OperatorFamily skew_commuting_family(std::size_t dim, std::size_t noise_count, double bound, std::uint64_t seed) {
    if (dim % 2 != 0 || dim == 0) throw DomainError("skew commuting family needs an even dimension");
    if (noise_count == 0) throw DomainError("skew commuting family needs at least one noise operator");
    const Matrix q = random_orthogonal(dim, seed);
    std::vector<TruncatedOperator> noise;
    for (std::size_t k = 1; k <= noise_count; ++k) {
        Matrix block = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        double top = 0.0;
        for (std::size_t j = 0; j < dim / 2; ++j) {
            const double rate = rng::standard_normal(seed, {rng::Stream::model, k, 2, static_cast<std::uint32_t>(j)});
            const auto a = static_cast<Eigen::Index>(2 * j);
            block(a, a + 1) = rate;
            block(a + 1, a) = -rate;
            top = std::max(top, std::abs(rate));
        }
        if (top > 0.0) block *= bound / static_cast<double>(noise_count) / top;
        noise.emplace_back(Matrix(q * block * q.transpose()));
    }
    return OperatorFamily::noise_only(std::move(noise));
}

// ---------------------------------------------------------------------------
// Monte Carlo

WienerPaths replicate_paths(const MonteCarloSetup& setup, std::size_t index) {
    return sample_wiener(setup.grid, std::max<std::size_t>(setup.noise_count, 1), rng::derive_seed(setup.seed, index));
}

stats::Estimate mc_moment(const FlowBuilder& build, const MonteCarloSetup& setup, double q) {
    if (!(q >= 1.0)) throw DomainError("moment order must be >= 1");
    if (setup.n_paths == 0) throw DomainError("mc_moment needs n_paths >= 1");
    const auto values = parallel::map(setup.n_paths, [&](std::size_t i) {
        return std::pow(operator_norm(build(replicate_paths(setup, i)).terminal()), q);
    });
    return stats::mean_with_se(values);
}

namespace {

// increments[j] -> per-path values of ||difference||^{2L}; reduces and regresses.
MomentReport finish_moments(int L, const std::vector<double>& increments,
                            const std::vector<std::vector<double>>& per_path) {
    MomentReport r;
    r.L = L;
    r.increments = increments;
    const std::size_t lags = increments.size();
    std::vector<double> column(per_path.size());
    for (std::size_t j = 0; j < lags; ++j) {
        for (std::size_t i = 0; i < per_path.size(); ++i) column[i] = per_path[i][j];
        const auto e = stats::mean_with_se(column);
        r.moments.push_back(e.value);
        r.std_errors.push_back(e.se);
        if (!(e.se <= kNoiseFloorRatio * e.value)) {
            std::ostringstream msg;
            msg << "Monte Carlo noise floor at increment " << increments[j] << ": s.e. " << e.se << " vs estimate "
                << e.value << "; increase n_paths";
            throw NoiseFloor(msg.str());
        }
    }
    std::vector<double> x(lags), y(lags);
    for (std::size_t j = 0; j < lags; ++j) {
        x[j] = std::log(increments[j]);
        y[j] = std::log(r.moments[j]);
    }
    const auto fit = stats::linear_fit(x, y);
    r.slope = fit.slope;
    r.intercept = fit.intercept;
    r.slope_se = fit.slope_se;
    r.slope_ci = {fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se};
    r.threshold = static_cast<double>(L - 1) - kSlopeTolerance;
    r.passes = r.slope >= r.threshold;
    return r;
}

void check_ladder(const MonteCarloSetup& setup, int L, const std::vector<std::size_t>& lag_steps) {
    if (L < 1) throw DomainError("moment parameter L must be >= 1");
    if (lag_steps.size() < 3) throw DomainError("increment ladder needs at least three points");
    if (!std::is_sorted(lag_steps.begin(), lag_steps.end()) || lag_steps.front() == 0) {
        throw DomainError("increment ladder must be positive and increasing");
    }
    if (lag_steps.back() > setup.grid.steps()) throw DomainError("increment ladder exceeds the grid");
    const double decades = std::log10(static_cast<double>(lag_steps.back()) / static_cast<double>(lag_steps.front()));
    if (decades < 1.5) throw DomainError("increment ladder must span at least 1.5 decades");
}

}  // namespace

MomentReport holder_slope(const FlowBuilder& build, const MonteCarloSetup& setup, int L,
                          const std::vector<std::size_t>& lag_steps) {
    check_ladder(setup, L, lag_steps);
    const std::size_t n = setup.grid.steps();
    const auto per_path = parallel::map(setup.n_paths, [&](std::size_t i) {
        const FlowSample flow = build(replicate_paths(setup, i));
        std::vector<double> v;
        for (std::size_t h : lag_steps) {
            const Matrix diff = flow.frames[n].matrix() - flow.frames[n - h].matrix();
            v.push_back(std::pow(operator_norm(diff), 2 * L));
        }
        return v;
    });
    std::vector<double> increments;
    for (std::size_t h : lag_steps) increments.push_back(static_cast<double>(h) * setup.grid.dt());
    return finish_moments(L, increments, per_path);
}

MomentReport holder_slope_two_parameter(const FlowBuilder& build, const MonteCarloSetup& setup, int L,
                                        const std::vector<std::size_t>& lag_steps) {
    check_ladder(setup, L, lag_steps);
    const std::size_t n = setup.grid.steps();
    const auto per_path = parallel::map(setup.n_paths, [&](std::size_t i) {
        const WienerPaths paths = replicate_paths(setup, i);
        const FlowSample full = build(paths);
        std::vector<double> v;
        for (std::size_t h : lag_steps) {
            const std::size_t front = h / 2;  // u - s in steps
            const std::size_t back = h - front;  // t - v in steps
            const FlowSample inner = front ? build(paths.restart_from(front)) : full;
            const Matrix diff = full.frames[n].matrix() - inner.frames[n - back - front].matrix();
            v.push_back(std::pow(operator_norm(diff), 2 * L));
        }
        return v;
    });
    std::vector<double> increments;
    for (std::size_t h : lag_steps) increments.push_back(static_cast<double>(h) * setup.grid.dt());
    return finish_moments(L, increments, per_path);
}

GrowthCurve growth_curve(const DiagonalModel& model, double delta, const std::vector<std::size_t>& k_ladder,
                         std::size_t n_seeds, std::uint64_t seed, double envelope_sigma) {
    if (k_ladder.empty() || !std::is_sorted(k_ladder.begin(), k_ladder.end()) || k_ladder.front() == 0) {
        throw DomainError("K ladder must be positive and increasing");
    }
    if (n_seeds == 0) throw DomainError("growth curve needs n_seeds >= 1");
    const std::size_t k_max = k_ladder.back();
    const auto maxima = parallel::map(n_seeds, [&](std::size_t j) {
        const auto z = sample_zetas(model, 0.0, delta, rng::derive_seed(seed, j), k_max);
        std::vector<double> at_ladder;
        double running = -std::numeric_limits<double>::infinity();
        std::size_t next = 0;
        for (std::size_t k = 1; k <= k_max; ++k) {
            running = std::max(running, z[k - 1]);
            if (k == k_ladder[next]) {
                at_ladder.push_back(running);
                ++next;
            }
        }
        return at_ladder;
    });
    GrowthCurve c;
    c.k = k_ladder;
    double log_ratio = 0.0;
    for (std::size_t i = 0; i < k_ladder.size(); ++i) {
        std::vector<double> col(n_seeds);
        for (std::size_t j = 0; j < n_seeds; ++j) col[j] = maxima[j][i];
        const double med = stats::median(std::move(col));
        const double env = std::exp(envelope_sigma * std::sqrt(2.0 * delta * std::log(static_cast<double>(k_ladder[i]))));
        c.median_max.push_back(med);
        c.envelope.push_back(env);
        log_ratio += std::log(med / env);
    }
    c.envelope_constant = std::exp(log_ratio / static_cast<double>(k_ladder.size()));
    c.envelope_ok = c.envelope_constant >= kEnvelopeLow && c.envelope_constant <= kEnvelopeHigh;
    c.monotone = std::adjacent_find(c.median_max.begin(), c.median_max.end(),
                                    [](double a, double b) { return !(b > a); }) == c.median_max.end();
    c.growth_ratio = c.median_max.back() / c.median_max.front();
    return c;
}

GrowthCurve skorokhod_growth(double sigma, double delta, const std::vector<std::size_t>& k_ladder,
                             std::size_t n_seeds, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw DomainError("noise strength must be >= 0");
    const DiagonalModel model(SequenceRule::constant(0.0), SequenceRule::constant(sigma), k_ladder.back());
    return growth_curve(model, delta, k_ladder, n_seeds, seed, sigma);
}

// ---------------------------------------------------------------------------
// Experiments

Criterion Criterion::within(std::string name, double value, std::optional<double> lower,
                            std::optional<double> upper) {
    Criterion c{std::move(name), value, lower, upper, true};
    if (lower && !(value >= *lower)) c.passed = false;
    if (upper && !(value <= *upper)) c.passed = false;
    return c;
}

Criterion Criterion::flag(std::string name, bool ok) { return Criterion{std::move(name), ok ? 1.0 : 0.0, 1.0, std::nullopt, ok}; }

bool ExperimentResult::passed() const {
    return !criteria.empty() &&
           std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; });
}

namespace {

nlohmann::json to_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["passed"] = r.passed();
    auto& crit = j["criteria"] = nlohmann::json::array();
    for (const auto& c : r.criteria) {
        nlohmann::json e{{"name", c.name}, {"value", c.value}, {"passed", c.passed}};
        e["lower"] = c.lower ? nlohmann::json(*c.lower) : nlohmann::json(nullptr);
        e["upper"] = c.upper ? nlohmann::json(*c.upper) : nlohmann::json(nullptr);
        crit.push_back(std::move(e));
    }
    auto& seeds = j["seeds"] = nlohmann::json::object();
    for (const auto& [name, seed] : r.seeds) seeds[name] = seed;
    auto& files = j["files"] = nlohmann::json::array();
    for (const auto& f : r.files) files.push_back(f.filename().string());
    j["wall_time_seconds"] = r.wall_seconds;
    j["threads"] = parallel::threads();
    j["config"] = to_yaml(cfg);
    return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const std::filesystem::path dir(cfg.output.dir);
    std::filesystem::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult r;
    try {
        r = detail::run_body(cfg, dir);
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw Error("experiment '" + cfg.experiment + "': " + e.what());
    }
    r.experiment = cfg.experiment;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream out(dir / (cfg.experiment + ".verdict.json"));
    out << to_json(r, cfg).dump(2) << "\n";
    return r;
}

std::vector<std::string> experiments_for(const std::string& subcommand) {
    if (subcommand == "simulate") return {"cross_solver", "moment_bound", "orthogonality"};
    if (subcommand == "chaos") return {"chaos_convergence"};
    if (subcommand == "invert") return {"inverse_flow_convergence"};
    if (subcommand == "diagonal") return {"diagonal_moments", "skorokhod_vs_trace", "three_series"};
    if (subcommand == "schatten") return {"schatten_gamma", "picard"};
    if (subcommand == "validate") return experiment_names();
    throw SchemaError("subcommand: unknown subcommand '" + subcommand + "'");
}

ExperimentConfig reduced_config(const std::string& experiment) {
    ExperimentConfig c = default_config(experiment);
    auto& g = c.grid;
    auto& mc = c.monte_carlo;
    mc.n_paths = std::max<std::size_t>(1, std::min<std::size_t>(mc.n_paths, 16));
    mc.n_seeds = 15;
    if (experiment == "cross_solver") {
        g.steps = 1024;
        g.ladder = {64, 128, 256, 512};
        c.solver.chaos_order = 4;
    } else if (experiment == "chaos_convergence") {
        g.steps = 256;
        c.solver.chaos_order = 5;
    } else if (experiment == "inverse_flow_convergence") {
        g.ladder = {64, 128, 256, 512};
    } else if (experiment == "moment_bound") {
        g.steps = 256;
        mc.n_paths = 2000;
    } else if (experiment == "diagonal_moments") {
        mc.n_paths = 5000;
    } else if (experiment == "skorokhod_vs_trace") {
        g.k_ladder = {64, 256, 1024, 4096};
        c.model.cutoff = 20000;
    } else if (experiment == "three_series") {
        c.model.cutoff = 4096;
    } else if (experiment == "schatten_gamma") {
        g.t_min = 1e-3;
        c.model.p = {2.0, 3.0};
    } else if (experiment == "picard") {
        g.steps = 64;
        mc.n_paths = 2;
    } else if (experiment == "orthogonality") {
        g.steps = 64;
    }
    return c;
}

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::filesystem::path> csv_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") out.push_back(e.path().filename());
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool same_csvs(const std::filesystem::path& a, const std::filesystem::path& b) {
    const auto fa = csv_files(a);
    if (fa.empty() || fa != csv_files(b)) return false;
    return std::all_of(fa.begin(), fa.end(), [&](const auto& f) { return slurp(a / f) == slurp(b / f); });
}

}  // namespace

ExperimentResult determinism_check(const std::filesystem::path& out, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::pair<std::string, int>> runs{{"serial_a", 1}, {"threads_8", 8}, {"serial_b", 1}};
    for (const auto& [label, threads] : runs) {
        const parallel::ThreadScope scope(threads);
        for (const auto& name : experiment_names()) {
            ExperimentConfig cfg = reduced_config(name);
            cfg.monte_carlo.seed = seed;
            cfg.output.dir = (out / label).string();
            run_experiment(cfg);
        }
    }
    ExperimentResult r;
    r.experiment = "determinism";
    r.criteria.push_back(Criterion::flag("rerun_csv_identical", same_csvs(out / "serial_a", out / "serial_b")));
    r.criteria.push_back(Criterion::flag("threads_1_vs_8_csv_identical", same_csvs(out / "serial_a", out / "threads_8")));
    r.seeds.emplace_back("base", seed);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream verdict(out / "determinism.verdict.json");
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["passed"] = r.passed();
    for (const auto& c : r.criteria) j["criteria"].push_back({{"name", c.name}, {"passed", c.passed}});
    j["seeds"] = {{"base", seed}};
    j["wall_time_seconds"] = r.wall_seconds;
    verdict << j.dump(2) << "\n";
    return r;
}

}  // namespace stochflow
