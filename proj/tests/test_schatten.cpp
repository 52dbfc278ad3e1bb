#include "stochflow/errors.hpp"
#include "stochflow/flow.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/schatten.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stochflow;

TEST(SpectrumModel, FactoriesAndGenerator) {
    const auto s = SpectrumModel::values({3.0, 1.0, 2.0});
    EXPECT_EQ(s.eigenvalues(), (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(s.largest(), 3.0);
    EXPECT_EQ(s.tail_bound(0.1, 2.0), 0.0);
    EXPECT_EQ(s.generator()(1, 1), -2.0);
    const auto pw = SpectrumModel::power_rule(0.5, 2.0, 4);
    EXPECT_EQ(pw.eigenvalues(), (std::vector<double>{0.5, 2.0, 4.5, 8.0}));
    EXPECT_THROW(SpectrumModel::power_rule(1.0, 0.5, 4), DomainError);
    EXPECT_THROW(SpectrumModel::values({-1.0}), DomainError);
}

TEST(DirichletLaplacian, Enumeration) {
    EXPECT_EQ(dirichlet_laplacian_spectrum(1).eigenvalues(), (std::vector<double>{2.0}));
    EXPECT_EQ(dirichlet_laplacian_spectrum(2).eigenvalues(), (std::vector<double>{2.0, 5.0, 5.0, 8.0}));
    EXPECT_EQ(dirichlet_laplacian_spectrum(17).size(), 289u);
}

TEST(SemigroupSchattenNorm, ClosedForms) {
    EXPECT_DOUBLE_EQ(semigroup_schatten_norm(SpectrumModel::values({0.0}), 3.7, 2.5).norm, 1.0);
    // sum_j e^{-j} = 1 / (e - 1)
    const auto geometric = SpectrumModel::power_rule(1.0, 1.0, 2000);
    const auto v = semigroup_schatten_norm(geometric, 1.0, 1.0);
    EXPECT_NEAR(v.norm, 1.0 / (std::numbers::e - 1.0), 1e-14);
    EXPECT_LE(v.tail, 1e-300);
    EXPECT_THROW(semigroup_schatten_norm(geometric, 0.0, 1.0), DomainError);
    EXPECT_THROW(semigroup_schatten_norm(geometric, 1.0, 0.5), DomainError);
}

TEST(SemigroupSchattenNorm, TailBoundCoversTruncation) {
    const double t = 0.01, p = 2.0;
    const auto small = dirichlet_laplacian_spectrum(20);
    const auto big = dirichlet_laplacian_spectrum(200);
    const double truncated = std::pow(semigroup_schatten_norm(small, t, p).norm, p);
    const double full = std::pow(semigroup_schatten_norm(big, t, p).norm, p);
    const double tail = semigroup_schatten_norm(small, t, p).tail;
    EXPECT_GE(tail, full - truncated);
    EXPECT_LE(tail, 10.0 * (full - truncated));
}

TEST(SemigroupSchattenNorm, LaplacianSmallTimeAsymptotics) {
    const double p = 3.0;
    for (double t : log_spaced(1e-4, 1e-2, 9)) {
        const auto spec = dirichlet_laplacian_spectrum(laplacian_cutoff_for(t, p));
        const auto v = semigroup_schatten_norm(spec, t, p);
        const double ratio = v.norm / std::pow(1.0 / (2.0 * t * p), 1.0 / p);
        EXPECT_GE(ratio, 0.8) << t;
        EXPECT_LE(ratio, 1.25) << t;
        EXPECT_LE(v.tail, 1e-12 * std::pow(v.norm, p));
    }
}

TEST(SemigroupSchattenNorm, MonotoneInTime) {
    const auto spec = dirichlet_laplacian_spectrum(30);
    double prev = INFINITY;
    for (double t : log_spaced(1e-3, 1.0, 20)) {
        const double v = semigroup_schatten_norm(spec, t, 2.5).norm;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(SemigroupSchattenNorm, IdealProperty) {
    const auto spec = SpectrumModel::power_rule(1.0, 1.5, 6);
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        Matrix t(6, 6);
        for (Eigen::Index i = 0; i < 6; ++i) {
            for (Eigen::Index j = 0; j < 6; ++j) {
                t(i, j) = rng::standard_normal(13, {rng::Stream::uniform, trial, static_cast<std::uint32_t>(i),
                                                    static_cast<std::uint32_t>(j)});
            }
        }
        const double time = 0.05 * static_cast<double>(trial % 10 + 1);
        const Matrix semigroup = matrix_exponential(Matrix(time * spec.generator().matrix()));
        for (double p : {1.0, 2.0, 3.5}) {
            EXPECT_LE(schatten_norm(Matrix(semigroup * t), p), operator_norm(semigroup) * schatten_norm(t, p) + 1e-10);
        }
    }
}

TEST(CheckSmoothing, LaplacianVerdicts) {
    const auto times = log_spaced(1e-4, 1e-2, 16);
    const auto spec = dirichlet_laplacian_spectrum(laplacian_cutoff_for(1e-4, 2.0));
    for (double p : {2.5, 3.0, 4.0, 6.0}) {
        const auto r = check_smoothing(spec, p, times);
        EXPECT_NEAR(r.fitted_gamma, 1.0 / p, 0.05) << p;
        EXPECT_EQ(r.verdict, SmoothingVerdict::satisfied) << p;
        EXPECT_TRUE(r.satisfies_condition);
        EXPECT_FALSE(r.truncation_dominated);
        EXPECT_GE(r.r_squared, 0.99);
    }
    const auto boundary = check_smoothing(spec, 2.0, times);
    EXPECT_NEAR(boundary.fitted_gamma, 0.5, 0.05);
    EXPECT_EQ(boundary.verdict, SmoothingVerdict::violated);
    EXPECT_FALSE(boundary.satisfies_condition);
}

TEST(CheckSmoothing, FiniteSpectrumIsTruncationDominated) {
    const auto spec = SpectrumModel::power_rule(1.0, 1.0, 10);
    const auto r = check_smoothing(spec, 3.0, log_spaced(1e-4, 1e-2, 12));
    EXPECT_TRUE(r.truncation_dominated);
    EXPECT_NEAR(r.fitted_gamma, 0.0, 0.05);
    EXPECT_EQ(to_string(SmoothingVerdict::undetermined), "undetermined");
}

TEST(CheckSmoothing, RejectsBadGrids) {
    const auto spec = dirichlet_laplacian_spectrum(10);
    EXPECT_THROW(check_smoothing(spec, 3.0, log_spaced(1e-3, 1e-2, 5)), DomainError);
    EXPECT_THROW(check_smoothing(spec, 3.0, log_spaced(1e-2, 2.0, 10)), DomainError);
}

TEST(PicardSolver, ZeroNoiseConvergesImmediately) {
    const auto spec = SpectrumModel::values({0.5, 1.0, 4.0});
    const OperatorFamily family = OperatorFamily::noise_only({TruncatedOperator::zero(3)});
    const auto paths = sample_wiener(TimeGrid(0.0, 1.0, 32), 1, 1);
    const auto r = picard_mild_solver(spec, family, paths, 2.0);
    EXPECT_LE(r.residuals.size(), 2u);
    for (std::size_t i = 0; i <= 32; ++i) {
        const double t = paths.grid().point(i);
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(r.flow.frames[i](j, j), std::exp(-spec.eigenvalues()[static_cast<std::size_t>(j)] * t), 1e-14);
        }
    }
    EXPECT_EQ(r.flow.solver, SolverTag::picard_schatten);
}

TEST(PicardSolver, ScalarClosedForm) {
    const double lambda = 1.5, sigma = 0.6;
    const auto spec = SpectrumModel::values({lambda});
    const OperatorFamily family = OperatorFamily::noise_only({TruncatedOperator::diagonal(std::vector<double>{sigma})});
    const std::size_t n = 4096;
    const auto paths = sample_wiener(TimeGrid(0.0, 1.0, n), 1, 8);
    const auto r = picard_mild_solver(spec, family, paths, 2.0, {200, 1e-14, 6});
    for (std::size_t i = 0; i <= n; i += 256) {
        const double t = paths.grid().point(i);
        const double exact = std::exp(-lambda * t + sigma * paths.value(0, i) - 0.5 * sigma * sigma * t);
        EXPECT_NEAR(r.flow.frames[i](0, 0), exact, 5.0 * std::sqrt(paths.grid().dt()) * exact);
    }
}

TEST(PicardSolver, MatchesExponentialEuler) {
    const auto spec = dirichlet_laplacian_spectrum(3);
    const OperatorFamily family = random_family(9, 2, 0.5, 0.0, 3);
    const auto paths = sample_wiener(TimeGrid(0.0, 1.0, 256), 2, 3);
    const auto r = picard_mild_solver(spec, family, paths, 3.0);
    const auto euler = euler_flow(spec.generator(), family, paths);
    for (std::size_t i = 0; i <= 256; ++i) {
        const double g = schatten_norm(Matrix(r.flow.frames[i].matrix() - euler.frames[i].matrix()), 3.0);
        EXPECT_LE(g, 10.0 * std::sqrt(paths.grid().dt()));
    }
    EXPECT_LT(residual_ratio(r.residuals, 3), 1.0);
}

TEST(PicardSolver, ContractionImprovesOnShorterHorizons) {
    const auto spec = dirichlet_laplacian_spectrum(3);
    const OperatorFamily family = random_family(9, 2, 1.0, 0.0, 5);
    const PicardOptions opts{40, 1e-14, 0};
    double prev = INFINITY;
    for (double horizon : {1.0, 0.25, 1.0 / 16.0}) {
        const auto paths = sample_wiener(TimeGrid(0.0, horizon, 64), 2, 5);
        const auto r = picard_mild_solver(spec, family, paths, 3.0, opts);
        const double ratio = residual_ratio(r.residuals, 3);
        EXPECT_LT(ratio, prev) << horizon;
        prev = ratio;
    }
}

TEST(PicardSolver, DivergenceIsChainedOrReported) {
    const auto spec = SpectrumModel::values({0.0, 0.0});
    const OperatorFamily family = random_family(2, 1, 40.0, 0.0, 7);
    const auto paths = sample_wiener(TimeGrid(0.0, 1.0, 256), 1, 7);
    EXPECT_THROW(picard_mild_solver(spec, family, paths, 2.0, {50, 1e-14, 0}), PicardDivergence);
    const auto chained = picard_mild_solver(spec, family, paths, 2.0, {50, 1e-14, 8});
    EXPECT_GT(chained.segments, 1u);
    const auto euler = euler_flow(spec.generator(), family, paths);
    const double scale = schatten_norm(euler.terminal().matrix(), 2.0);
    EXPECT_LE(schatten_norm(Matrix(chained.flow.terminal().matrix() - euler.terminal().matrix()), 2.0), 1e-8 * scale);
}

TEST(PicardSolver, InputErrors) {
    const auto spec = SpectrumModel::values({1.0, 2.0});
    const auto paths = sample_wiener(TimeGrid(0.0, 1.0, 8), 1, 1);
    EXPECT_THROW(picard_mild_solver(spec, random_family(3, 1, 1.0, 0.0, 1), paths, 2.0), DimensionMismatch);
    EXPECT_THROW(picard_mild_solver(spec, random_family(2, 2, 1.0, 0.0, 1), paths, 2.0), PathShortfall);
    EXPECT_THROW(picard_mild_solver(spec, random_family(2, 1, 1.0, 0.0, 1), paths, 0.5), DomainError);
}

TEST(ResidualRatio, MeanOfPositiveRatios) {
    EXPECT_DOUBLE_EQ(residual_ratio({8.0, 4.0, 1.0, 0.5, 0.25}, 1), (0.25 + 0.5 + 0.5) / 3.0);
    EXPECT_DOUBLE_EQ(residual_ratio({1.0, 0.5, 0.0}, 0), 0.5);
}
