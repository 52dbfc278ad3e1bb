#include "stochflow/flow.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <omp.h>
#include <stdexcept>
#include <string>

using namespace stochflow;

TEST(ParallelMap, MatchesSerialReferenceBitForBit) {
    const OperatorFamily family = random_family(3, 2, 0.6, 0.2, 1);
    const MonteCarloSetup setup{TimeGrid(0.0, 1.0, 128), 2, 64, 99};
    auto one = [&](std::size_t i) {
        const auto flow = euler_flow(std::nullopt, family, replicate_paths(setup, i));
        return operator_norm(flow.terminal());
    };
    const auto serial = parallel::map_serial(setup.n_paths, one);
    for (int threads : {1, 2, 8}) {
        const parallel::ThreadScope scope(threads);
        EXPECT_EQ(parallel::map(setup.n_paths, one), serial) << threads << " threads";
    }
}

TEST(ParallelMap, EmptyAndOrdering) {
    EXPECT_TRUE(parallel::map(0, [](std::size_t i) { return static_cast<int>(i); }).empty());
    const parallel::ThreadScope scope(4);
    const auto v = parallel::map(1000, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(v[i], i * i);
}

TEST(ParallelMap, RethrowsLowestIndexedFailure) {
    const parallel::ThreadScope scope(4);
    auto failing = [](std::size_t i) -> int {
        if (i == 7 || i == 3 || i == 90) throw std::runtime_error("index " + std::to_string(i));
        return 0;
    };
    try {
        parallel::map(100, failing);
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_EQ(std::string(e.what()), "index 3");
    }
    try {
        parallel::map_serial(100, failing);
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_EQ(std::string(e.what()), "index 3");
    }
}

TEST(ParallelMap, UsesRequestedThreadCount) {
    const parallel::ThreadScope scope(3);
    const auto ids = parallel::map(64, [](std::size_t) { return omp_get_num_threads(); });
    for (int n : ids) EXPECT_EQ(n, 3);
}

TEST(ThreadScope, RestoresPreviousSetting) {
    const int before = parallel::threads();
    {
        const parallel::ThreadScope outer(5);
        EXPECT_EQ(parallel::threads(), 5);
        {
            const parallel::ThreadScope inner(2);
            EXPECT_EQ(parallel::threads(), 2);
        }
        EXPECT_EQ(parallel::threads(), 5);
    }
    EXPECT_EQ(parallel::threads(), before);
    const parallel::ThreadScope clamp(0);
    EXPECT_EQ(parallel::threads(), 1);
}

TEST(MonteCarlo, EstimatesIndependentOfThreads) {
    const OperatorFamily family = commuting_family(2, 1, 0.5, 0.0, 2);
    const MonteCarloSetup setup{TimeGrid(0.0, 1.0, 32), 1, 200, 4};
    const FlowBuilder build = [&](const WienerPaths& w) { return commutative_ito_flow(family, w); };
    stats::Estimate a, b;
    {
        const parallel::ThreadScope scope(1);
        a = mc_moment(build, setup, 2.0);
    }
    {
        const parallel::ThreadScope scope(6);
        b = mc_moment(build, setup, 2.0);
    }
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.se, b.se);
}
