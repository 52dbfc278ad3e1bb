#include "stochflow/config.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/stats.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace stochflow;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("stochflow_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

OperatorFamily scalar(double sigma, double drift = 0.0) {
    return OperatorFamily(TruncatedOperator::diagonal(std::vector<double>{drift}),
                          {TruncatedOperator::diagonal(std::vector<double>{sigma})});
}

}  // namespace

TEST(Stats, MeanJackknifeMedianFit) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 10.0};
    EXPECT_DOUBLE_EQ(stats::mean(x), 4.0);
    // jackknife s.e. of the mean equals s / sqrt(n)
    double ss = 0.0;
    for (double v : x) ss += (v - 4.0) * (v - 4.0);
    EXPECT_NEAR(stats::jackknife_se(x), std::sqrt(ss / 4.0 / 5.0), 1e-14);
    EXPECT_DOUBLE_EQ(stats::median(x), 3.0);
    EXPECT_DOUBLE_EQ(stats::median({4.0, 1.0, 3.0, 2.0}), 2.5);
    const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> ys{1.0, 3.0, 5.0, 7.0};
    const auto fit = stats::linear_fit(xs, ys);
    EXPECT_NEAR(fit.slope, 2.0, 1e-14);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
    EXPECT_NEAR(fit.slope_se, 0.0, 1e-14);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-14);
    EXPECT_THROW(stats::linear_fit(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 1.0}), DomainError);
}

TEST(TestFamilies, NormsAndStructure) {
    const auto r = random_family(4, 3, 1.2, 0.4, 5);
    for (const auto& b : r.noise()) EXPECT_NEAR(operator_norm(b), 0.4, 1e-12);
    EXPECT_NEAR(operator_norm(r.drift()), 0.4, 1e-12);
    const auto c = commuting_family(4, 2, 1.0, 0.3, 5);
    EXPECT_EQ(c.first_noncommuting_pair().first, -1);
    const auto s = skew_commuting_family(4, 2, 1.0, 5);
    for (const auto& b : s.noise()) EXPECT_LE(operator_norm(Matrix(b.matrix() + b.matrix().transpose())), 1e-14);
    EXPECT_THROW(skew_commuting_family(3, 2, 1.0, 5), DomainError);
    // same seed, same family
    EXPECT_EQ(random_family(4, 3, 1.2, 0.4, 5).noise()[2].matrix(), r.noise()[2].matrix());
}

TEST(McMoment, DeterministicOracle) {
    const OperatorFamily family(TruncatedOperator::diagonal(std::vector<double>{0.3, -1.0}),
                                {TruncatedOperator::zero(2)});
    const MonteCarloSetup setup{TimeGrid(0.0, 2.0, 16), 1, 10, 1};
    const auto e = mc_moment([&](const WienerPaths& w) { return commutative_ito_flow(family, w); }, setup, 3.0);
    EXPECT_NEAR(e.value, std::exp(3.0 * 0.3 * 2.0), 1e-12);
    EXPECT_NEAR(e.se, 0.0, 1e-12);
}

TEST(McMoment, GeometricBrownianMotionOracle) {
    const double sigma = 0.4, t = 1.0;
    const OperatorFamily family = scalar(sigma);
    const MonteCarloSetup setup{TimeGrid(0.0, t, 1), 1, 20000, 11};
    for (double q : {1.0, 2.0, 3.0}) {
        const auto e = mc_moment([&](const WienerPaths& w) { return commutative_ito_flow(family, w); }, setup, q);
        EXPECT_NEAR(e.value, std::exp(0.5 * q * (q - 1.0) * sigma * sigma * t), 3.0 * e.se + 1e-12) << q;
    }
}

TEST(HolderSlope, BrownianIncrementsGiveSlopeL) {
    const OperatorFamily family = scalar(0.3);
    const MonteCarloSetup setup{TimeGrid(0.0, 1.0, 1024), 1, 4000, 3};
    const FlowBuilder build = [&](const WienerPaths& w) { return commutative_ito_flow(family, w); };
    const auto r = holder_slope(build, setup, 2, {1, 4, 16, 64});
    // E|Y(t) - Y(t - h)|^4 ~ 3 sigma^4 h^2 E Y^4
    EXPECT_NEAR(r.slope, 2.0, 0.1);
    EXPECT_TRUE(r.passes);
    EXPECT_DOUBLE_EQ(r.threshold, 0.85);
    EXPECT_LT(r.slope_ci.first, r.slope);
    const auto two = holder_slope_two_parameter(build, setup, 2, {2, 8, 32, 128});
    EXPECT_NEAR(two.slope, 2.0, 0.1);
}

TEST(HolderSlope, LadderValidation) {
    const MonteCarloSetup setup{TimeGrid(0.0, 1.0, 256), 1, 10, 3};
    const FlowBuilder build = [](const WienerPaths& w) { return commutative_ito_flow(scalar(0.3), w); };
    EXPECT_THROW(holder_slope(build, setup, 2, {1, 2, 4}), DomainError);  // 0.6 decades
    EXPECT_THROW(holder_slope(build, setup, 2, {1, 64}), DomainError);
    EXPECT_THROW(holder_slope(build, setup, 2, {1, 64, 32}), DomainError);
    EXPECT_THROW(holder_slope(build, setup, 2, {1, 64, 512}), DomainError);
    EXPECT_THROW(holder_slope(build, setup, 0, {1, 8, 64}), DomainError);
}

TEST(HolderSlope, NoiseFloorIsReported) {
    // a single path out of forty carries all the mass
    const MonteCarloSetup setup{TimeGrid(0.0, 1.0, 64), 1, 40, 3};
    const std::uint64_t loud = rng::derive_seed(3, 17);
    const FlowBuilder build = [&](const WienerPaths& w) {
        FlowSample f = commutative_ito_flow(scalar(0.0), w);
        if (w.seed() == loud) {
            for (std::size_t i = 0; i < f.frames.size(); ++i) {
                f.frames[i] = TruncatedOperator(Matrix::Constant(1, 1, 1.0 + static_cast<double>(i)));
            }
        }
        return f;
    };
    EXPECT_THROW(holder_slope(build, setup, 2, {1, 8, 64}), NoiseFloor);
}

TEST(GrowthCurve, QuietAndConstantNoise) {
    const auto quiet = skorokhod_growth(0.0, 1.0, {16, 256, 4096}, 11, 1);
    for (double m : quiet.median_max) EXPECT_DOUBLE_EQ(m, 1.0);
    EXPECT_FALSE(quiet.monotone);
    EXPECT_DOUBLE_EQ(quiet.growth_ratio, 1.0);

    const auto loud = skorokhod_growth(1.0, 1.0, {64, 512, 4096, 32768}, 51, 2);
    EXPECT_TRUE(loud.monotone);
    EXPECT_GT(loud.growth_ratio, 2.0);
    EXPECT_TRUE(loud.envelope_ok);
    EXPECT_EQ(loud.envelope.size(), 4u);
    EXPECT_NEAR(loud.envelope[0], std::exp(std::sqrt(2.0 * std::log(64.0))), 1e-12);
    EXPECT_THROW(skorokhod_growth(1.0, 1.0, {64, 32}, 5, 1), DomainError);
}

TEST(Config, DefaultsExistForEveryExperiment) {
    ASSERT_EQ(experiment_names().size(), 10u);
    for (const auto& name : experiment_names()) {
        const auto cfg = default_config(name);
        EXPECT_EQ(cfg.experiment, name);
        EXPECT_NO_THROW(validate(cfg));
        EXPECT_NO_THROW(validate(reduced_config(name)));
    }
    EXPECT_THROW(default_config("nope"), SchemaError);
}

TEST(Config, SchemaErrorsNameTheField) {
    auto expect_field = [](const std::string& yaml, const std::string& field) {
        try {
            parse_config(yaml);
            FAIL() << "expected SchemaError for " << field;
        } catch (const SchemaError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_field("experiment: cross_solver\ngrid:\n  stepz: 10\n", "grid.stepz");
    expect_field("experiment: cross_solver\ngrid:\n  steps: many\n", "grid.steps");
    expect_field("experiment: cross_solver\nsolverz:\n  chaos_order: 3\n", "solverz");
    expect_field("experiment: cross_solver\nmodel:\n  p: 3\n", "model.p");
    expect_field("experiment: unknown_thing\n", "experiment");
    expect_field("grid:\n  steps: 10\n", "experiment");
    expect_field("experiment: moment_bound\ngrid:\n  ladder: [4, 2, 8]\n", "grid.ladder");
    expect_field("experiment: moment_bound\nmonte_carlo:\n  n_paths: 0\n", "monte_carlo.n_paths");
}

TEST(Config, OverridesAndRoundTrip) {
    const auto cfg = parse_config(
        "experiment: picard\nmodel:\n  dim: 4\n  p: [2.5, 3]\nmonte_carlo:\n  seed: 42\noutput:\n  dir: somewhere\n");
    EXPECT_EQ(cfg.model.dim, 4u);
    EXPECT_EQ(cfg.model.p, (std::vector<double>{2.5, 3.0}));
    EXPECT_EQ(cfg.monte_carlo.seed, 42u);
    EXPECT_EQ(cfg.output.dir, "somewhere");
    // untouched fields keep the experiment defaults
    EXPECT_EQ(cfg.grid.steps, default_config("picard").grid.steps);
    EXPECT_EQ(to_yaml(parse_config(to_yaml(cfg))), to_yaml(cfg));

    const auto dir = scratch("config");
    const auto file = dir / "c.yaml";
    std::ofstream(file) << to_yaml(cfg);
    EXPECT_EQ(to_yaml(load_config(file)), to_yaml(cfg));
    EXPECT_THROW(load_config(dir / "missing.yaml"), SchemaError);
}

TEST(Experiments, SubcommandMapping) {
    EXPECT_EQ(experiments_for("chaos"), (std::vector<std::string>{"chaos_convergence"}));
    EXPECT_EQ(experiments_for("validate").size(), 10u);
    std::size_t covered = 0;
    for (const char* s : {"simulate", "chaos", "invert", "diagonal", "schatten"}) covered += experiments_for(s).size();
    EXPECT_EQ(covered, 10u);
    EXPECT_THROW(experiments_for("bogus"), SchemaError);
}

TEST(Experiments, CriteriaBounds) {
    EXPECT_TRUE(Criterion::within("x", 0.5, 0.4, 0.6).passed);
    EXPECT_FALSE(Criterion::within("x", 0.7, 0.4, 0.6).passed);
    EXPECT_FALSE(Criterion::within("x", std::nan(""), std::nullopt, 1.0).passed);
    EXPECT_TRUE(Criterion::within("x", 5.0, 1.0, std::nullopt).passed);
    EXPECT_TRUE(Criterion::flag("f", true).passed);
    ExperimentResult r;
    r.criteria = {Criterion::flag("a", true), Criterion::flag("b", false)};
    EXPECT_FALSE(r.passed());
}

TEST(Experiments, ReducedRunsWriteVerdictAndCsv) {
    const auto dir = scratch("experiments");
    for (const char* name : {"orthogonality", "diagonal_moments", "schatten_gamma", "three_series", "picard"}) {
        ExperimentConfig cfg = reduced_config(name);
        cfg.output.dir = dir.string();
        const auto result = run_experiment(cfg);
        EXPECT_EQ(result.experiment, name);
        EXPECT_FALSE(result.criteria.empty());
        ASSERT_FALSE(result.files.empty());
        for (const auto& f : result.files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
        std::ifstream in(dir / (std::string(name) + ".verdict.json"));
        ASSERT_TRUE(in.good()) << name;
        const auto j = nlohmann::json::parse(in);
        EXPECT_EQ(j.at("experiment"), name);
        EXPECT_EQ(j.at("passed").get<bool>(), result.passed());
        EXPECT_EQ(j.at("criteria").size(), result.criteria.size());
        EXPECT_TRUE(j.contains("seeds"));
        EXPECT_TRUE(j.contains("config"));
    }
}

TEST(Experiments, SeedChangesOutputDeterministically) {
    const auto dir = scratch("seeds");
    auto run = [&](std::uint64_t seed, const std::string& sub) {
        ExperimentConfig cfg = reduced_config("orthogonality");
        cfg.monte_carlo.seed = seed;
        cfg.output.dir = (dir / sub).string();
        run_experiment(cfg);
        std::ifstream in(dir / sub / "orthogonality_defects.csv");
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string a = run(1, "a"), b = run(1, "b"), c = run(2, "c");
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}
