#include "stochflow/diagonal.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/noise.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace stochflow;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

SequenceRule log_rule(double power) { return SequenceRule::power_log(1.0, 0.0, power); }

}  // namespace

TEST(SequenceRule, EvaluationAndDescription) {
    EXPECT_DOUBLE_EQ(SequenceRule::constant(2.5)(7), 2.5);
    EXPECT_DOUBLE_EQ(SequenceRule::power_log(3.0, 2.0, 0.0)(4), 48.0);
    EXPECT_DOUBLE_EQ(log_rule(1.0)(1), std::log(2.0));
    EXPECT_DOUBLE_EQ(SequenceRule::values({1.0, 2.0})(2), 2.0);
    EXPECT_FALSE(SequenceRule::values({1.0}).symbolic());
    EXPECT_FALSE(SequenceRule::constant(1.0).describe().empty());
}

TEST(AsymptoticLimit, LeadingOrderDecides) {
    EXPECT_EQ(asymptotic_limit({{1.0, 1.0, 0.0}, {-5.0, 0.5, 3.0}}), kInf);
    EXPECT_EQ(asymptotic_limit({{-0.5, 0.0, 2.0}, {1.414, 0.0, 1.5}}), -kInf);
    EXPECT_DOUBLE_EQ(asymptotic_limit({{2.0, 0.0, 0.0}, {1.0, -1.0, 0.0}}), 2.0);
    EXPECT_EQ(asymptotic_limit({{1.0, -0.5, 4.0}}), 0.0);
    // equal orders merge before the sign is read
    EXPECT_EQ(asymptotic_limit({{1.0, 1.0, 0.0}, {-3.0, 1.0, 0.0}, {1.0, 0.0, 5.0}}), -kInf);
}

TEST(SeriesConverges, PowerLogClassification) {
    EXPECT_TRUE(series_converges(SequenceRule::power_log(1.0, -2.0, 0.0)));
    EXPECT_FALSE(series_converges(SequenceRule::power_log(1.0, -1.0, 0.0)));
    EXPECT_FALSE(series_converges(SequenceRule::power_log(1.0, -1.0, 0.5)));
    EXPECT_TRUE(series_converges(SequenceRule::power_log(1.0, -1.0, -2.0)));
    EXPECT_FALSE(series_converges(SequenceRule::power_log(1.0, -1.0, -1.0)));
    EXPECT_TRUE(series_converges(SequenceRule::constant(0.0)));
}

TEST(Zeta, DeterministicWithoutNoise) {
    const DiagonalModel m(SequenceRule::constant(-0.7), SequenceRule::constant(0.0), 10);
    EXPECT_DOUBLE_EQ(zeta(m, 3, 0.5, 2.5, 1.234), std::exp(-1.4));
}

TEST(Zeta, MomentIdentities) {
    const double pairs[][2] = {{0.0, 1.0}, {-0.5, 0.5}, {0.3, 1.2}, {-1.0, 0.0}, {0.2, 0.2}};
    const double delta = 0.8;
    const std::size_t draws = 100000;
    for (const auto& pr : pairs) {
        const DiagonalModel m(SequenceRule::constant(pr[0]), SequenceRule::constant(pr[1]), draws);
        std::vector<double> z(draws), z2(draws);
        for (std::size_t i = 0; i < draws; ++i) {
            z[i] = zeta(m, 1, 0.0, delta, terminal_increment(rng::derive_seed(3, i), 0, delta));
            z2[i] = z[i] * z[i];
        }
        const auto first = stats::mean_with_se(z);
        const auto second = stats::mean_with_se(z2);
        EXPECT_NEAR(first.value, std::exp(pr[0] * delta), 3.0 * first.se + 1e-12) << pr[0] << "," << pr[1];
        EXPECT_NEAR(second.value, std::exp((2.0 * pr[0] + pr[1] * pr[1]) * delta), 3.0 * second.se + 1e-12)
            << pr[0] << "," << pr[1];
    }
}

TEST(L2Solvability, Examples) {
    const auto sko = l2_solvability(DiagonalModel(SequenceRule::constant(0.0), SequenceRule::constant(1.5), 100));
    EXPECT_TRUE(sko.solvable);
    EXPECT_DOUBLE_EQ(sko.sup.value, 2.25);
    EXPECT_TRUE(sko.sup.determined);

    const auto growing = l2_solvability(
        DiagonalModel(SequenceRule::power_log(1.0, 1.0, 0.0), SequenceRule::constant(0.0), 100));
    EXPECT_FALSE(growing.solvable);
    EXPECT_FALSE(growing.sup.finite);

    const auto damped = l2_solvability(
        DiagonalModel(SequenceRule::power_log(-1.0, 1.0, 0.0), SequenceRule::power_log(1.0, 0.5, 0.0), 100));
    EXPECT_TRUE(damped.solvable);
    EXPECT_NEAR(damped.sup.value, -1.0, 1e-12);
    EXPECT_EQ(damped.sup.argmax, 1u);
}

TEST(L2Solvability, ExplicitListsAreUndeterminedBeyondCutoff) {
    const auto r = l2_solvability(DiagonalModel(SequenceRule::values({0.0, 0.1}), SequenceRule::values({1.0, 2.0}), 2));
    EXPECT_TRUE(r.solvable);
    EXPECT_FALSE(r.sup.determined);
    EXPECT_NEAR(r.sup.value, 4.2, 1e-12);
    EXPECT_EQ(r.sup.argmax, 2u);
}

TEST(FlowCriterionRho, Examples) {
    const DiagonalModel sko(SequenceRule::constant(0.0), SequenceRule::constant(1.0), 1000);
    EXPECT_FALSE(flow_criterion_rho(sko, 0.0, 1.0).finite);

    const DiagonalModel quiet(SequenceRule::power_log(-1.0, 0.5, 0.0), SequenceRule::constant(0.0), 1000);
    const auto q = flow_criterion_rho(quiet, 0.0, 4.0);
    EXPECT_TRUE(q.finite);
    EXPECT_NEAR(q.value, -2.0, 1e-12);
}

TEST(FlowCriterionRho, LogNoiseIsFiniteAndMatchesBruteForce) {
    const DiagonalModel m(SequenceRule::constant(0.0), log_rule(1.0), 10);
    auto term = [](std::size_t k, double root_delta) {
        const double sg = std::log1p(static_cast<double>(k));
        return -0.5 * sg * sg * root_delta + sg * std::sqrt(2.0 * std::log(static_cast<double>(k)));
    };
    // peak near k = 90 for t - s = 1
    const auto rho = flow_criterion_rho(m, 0.0, 1.0);
    ASSERT_TRUE(rho.finite);
    EXPECT_TRUE(rho.determined);
    double brute = -kInf;
    for (std::size_t k = 1; k <= 10000000; ++k) brute = std::max(brute, term(k, 1.0));
    EXPECT_NEAR(rho.value, brute, 1e-12 * std::abs(brute));

    // for t - s = 1/16 the peak sits at log k = 72, beyond every integer type
    auto smooth = [](double u) {
        const double sg = std::log1p(std::exp(u));
        return -0.5 * sg * sg * 0.25 + sg * std::sqrt(2.0 * u);
    };
    const auto far = flow_criterion_rho(m, 0.0, 1.0 / 16.0);
    ASSERT_TRUE(far.finite);
    EXPECT_NEAR(far.log_argmax, 72.0, 0.5);
    EXPECT_EQ(far.argmax, std::numeric_limits<std::size_t>::max());
    EXPECT_NEAR(far.value, smooth(far.log_argmax), 1e-12 * far.value);
    for (double du : {-10.0, -1.0, -0.1, 0.1, 1.0, 10.0}) EXPECT_LE(smooth(far.log_argmax + du), far.value);

    const auto unscaled = flow_supremum_unscaled(m, 0.0, 0.25);
    EXPECT_TRUE(unscaled.finite);
    EXPECT_NE(unscaled.value, flow_criterion_rho(m, 0.0, 0.25).value);
}

TEST(ClassifySpectrum, Regimes) {
    EXPECT_EQ(classify_spectrum(DiagonalModel(SequenceRule::constant(0.0), log_rule(-1.0), 1000), 0.0, 1.0),
              SpectrumClass::noncompact_limit);
    EXPECT_EQ(classify_spectrum(DiagonalModel(SequenceRule::constant(0.0), log_rule(1.0), 1000), 0.0, 1.0),
              SpectrumClass::trace_class_as);
    // sigma_k -> 1 with alpha = 0
    const DiagonalModel accumulating(SequenceRule::constant(0.0),
                                     SequenceRule::power_log(1.0, 0.0, 0.0), 1000);
    EXPECT_THROW(classify_spectrum(accumulating, 0.0, 1.0), InconsistentModel);
    EXPECT_EQ(to_string(SpectrumClass::mixed), "mixed");
}

TEST(ThreeSeries, LogNoiseConvergesEverywhere) {
    const DiagonalModel m(SequenceRule::constant(0.0), log_rule(1.0), 1000000);
    const auto r = three_series_diagnostic(m, 0.0, 1.0, 1000000);
    EXPECT_TRUE(r.exceedance.convergent);
    EXPECT_TRUE(r.truncated_mean.convergent);
    EXPECT_TRUE(r.truncated_variance.convergent);
    EXPECT_TRUE(r.variance_below_mean);
    for (std::size_t k = 0; k < r.truncated_mean.partial_sums.size(); k += 997) {
        ASSERT_LE(r.truncated_variance.partial_sums[k], r.truncated_mean.partial_sums[k]);
    }
    // delta_k grows without bound when sigma_k / sqrt(log k) does
    EXPECT_GT(r.delta.back(), 5.0 * r.delta[9]);
    // summand below k^{-delta_k} once delta_k > 1
    for (std::size_t k = 1000; k <= 1000000; k *= 10) {
        EXPECT_LE(r.exceedance.terms[k - 1], std::pow(static_cast<double>(k), -r.delta[k - 1]));
    }
}

TEST(ThreeSeries, NoNoiseAndConstantNoise) {
    const auto quiet = three_series_diagnostic(
        DiagonalModel(SequenceRule::constant(-0.5), SequenceRule::constant(0.0), 100), 0.0, 1.0, 100);
    EXPECT_EQ(quiet.exceedance.partial_sums.back(), 0.0);
    EXPECT_TRUE(quiet.exceedance.convergent);
    const auto flat = three_series_diagnostic(
        DiagonalModel(SequenceRule::constant(0.0), SequenceRule::constant(1.0), 4096), 0.0, 1.0, 4096);
    EXPECT_FALSE(flat.exceedance.convergent);
    EXPECT_NEAR(flat.exceedance.terms[5], normal_tail(0.5), 1e-15);
}

TEST(SummarizeSeries, BlockRatios) {
    std::vector<double> geometric(1 << 12), harmonic(1 << 12);
    for (std::size_t k = 1; k <= geometric.size(); ++k) {
        geometric[k - 1] = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
        harmonic[k - 1] = 1.0 / static_cast<double>(k);
    }
    const auto g = summarize_series("inverse squares", geometric);
    EXPECT_TRUE(g.convergent);
    EXPECT_NEAR(g.block_ratios.back(), 0.5, 0.01);
    const auto h = summarize_series("harmonic", harmonic);
    EXPECT_FALSE(h.convergent);
    EXPECT_NEAR(h.partial_sums[9], 2.9289682539682538, 1e-14);
}

TEST(SampleTrace, FiniteAlmostSurelyWithInfiniteMean) {
    const std::size_t K = 100000;
    const DiagonalModel m(SequenceRule::constant(0.0), log_rule(1.0), K);
    std::vector<double> relative;
    for (std::size_t s = 0; s < 51; ++s) {
        const auto curve = sample_trace(m, 0.0, 1.0, rng::derive_seed(20240917, s), K);
        ASSERT_EQ(curve.partial_sums.size(), K);
        ASSERT_DOUBLE_EQ(curve.analytic_mean.back(), static_cast<double>(K));
        const double total = curve.partial_sums.back();
        relative.push_back((total - curve.partial_sums[K / 10 - 1]) / total);
    }
    // the mean curve gains 90% over the same decade
    EXPECT_LE(stats::median(relative), 1e-4);
}

TEST(SampleTrace, QuietModelCountsIndices) {
    const DiagonalModel m(SequenceRule::constant(0.0), SequenceRule::constant(0.0), 500);
    const auto curve = sample_trace(m, 0.0, 1.0, 1, 500);
    EXPECT_EQ(curve.partial_sums.back(), 500.0);
}

TEST(SampleZetas, ThreadIndependentAndKeyedByTerminalIncrement) {
    const DiagonalModel m(SequenceRule::constant(0.1), log_rule(1.0), 10000);
    const auto z = sample_zetas(m, 0.0, 0.5, 9, 10000);
    EXPECT_DOUBLE_EQ(z[41], zeta(m, 42, 0.0, 0.5, terminal_increment(9, 41, 0.5)));
}

TEST(SkorokhodGrowth, MedianMaximumIncreases) {
    const auto g = skorokhod_growth(1.0, 1.0, {64, 1024, 16384}, 51, 5);
    EXPECT_TRUE(g.monotone);
    EXPECT_GT(g.median_max.back(), g.median_max.front());
}

TEST(NoAccumulationAtZero, MinimumEigenvalueStable) {
    // sigma_k -> 0 with bounded sigma_k sqrt(log k)
    const DiagonalModel m(SequenceRule::constant(0.0), log_rule(-1.0), 100000);
    std::vector<double> small, large;
    for (std::size_t s = 0; s < 100; ++s) {
        const auto z = sample_zetas(m, 0.0, 1.0, rng::derive_seed(71, s), 100000);
        small.push_back(*std::min_element(z.begin(), z.begin() + 1000));
        large.push_back(*std::min_element(z.begin(), z.end()));
    }
    const double a = stats::median(small), b = stats::median(large);
    EXPECT_LT(std::abs(b - a) / a, 0.1);
}

TEST(MultiplicationCriteria, HomogeneousFields) {
    // a_k = 1/k^2: both sums converge
    const auto strong = homogeneous_field_functionals(SequenceRule::power_log(1.0, -2.0, 0.0));
    const auto v = multiplication_criteria(strong);
    EXPECT_TRUE(v.l2_solvable);
    EXPECT_TRUE(v.flow_exists_sufficient);
    EXPECT_NEAR(v.mu_total, std::pow(std::numbers::pi, 4) / 90.0, 1e-9);

    // a_k = 1/k: sum a_k^2 finite, sum a_k sqrt(log k) diverges like (log K)^{3/2}
    const auto weak = homogeneous_field_functionals(SequenceRule::power_log(1.0, -1.0, 0.0));
    const auto w = multiplication_criteria(weak);
    EXPECT_TRUE(w.l2_solvable);
    EXPECT_NEAR(w.mu_total, std::pow(std::numbers::pi, 2) / 6.0, 1e-9);
    ASSERT_TRUE(w.sqrt_log_sufficient.has_value());
    EXPECT_FALSE(*w.sqrt_log_sufficient);
    EXPECT_FALSE(w.flow_exists_sufficient);

    const auto flat = multiplication_criteria(homogeneous_field_functionals(SequenceRule::constant(1.0)));
    EXPECT_FALSE(flat.l2_solvable);
    EXPECT_FALSE(flat.flow_exists_sufficient);
}

TEST(MultiplicationCriteria, BrownianSheet) {
    const auto input = brownian_sheet_functionals(3, 2.0);
    EXPECT_DOUBLE_EQ(input.sum_sq_sup, 8.0);
    EXPECT_TRUE(multiplication_criteria(input).l2_solvable);
    EXPECT_FALSE(multiplication_criteria(brownian_sheet_functionals(2, kInf)).l2_solvable);
}

TEST(NormalTail, ArbitraryPrecisionOracles) {
    // 40-digit erfc values, frozen
    EXPECT_DOUBLE_EQ(normal_tail(0.0), 0.5);
    EXPECT_NEAR(normal_tail(1.5), 0.066807201268858066, 1e-14 * 0.0668);
    EXPECT_NEAR(normal_tail(5.0), 2.8665157187919391e-7, 1e-14 * 2.87e-7);
    EXPECT_NEAR(normal_tail(20.0), 2.7536241186062337e-89, 1e-13 * 2.75e-89);
    EXPECT_NEAR(log_normal_tail(20.0), -203.91715537109726, 1e-12);
    EXPECT_NEAR(log_normal_tail(37.0), -689.03058557689059, 1e-11);
    EXPECT_NEAR(log_normal_tail(40.0), -804.60844201375379, 1e-11);
    EXPECT_NEAR(log_normal_tail(100.0), -5005.5242086942051, 1e-10);
}

TEST(CriteriaReport, Assembled) {
    const DiagonalModel m(SequenceRule::constant(0.0), log_rule(1.0), 1000);
    const auto r = criteria_report(m, 0.0, 1.0, 1000);
    EXPECT_FALSE(r.l2_solvable);
    EXPECT_TRUE(r.rho.finite);
    EXPECT_EQ(r.classification, SpectrumClass::trace_class_as);
    ASSERT_TRUE(r.three_series.has_value());
}
