// Monte Carlo path loop: serial reference against the OpenMP map.

#include "stochflow/flow.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/parallel.hpp"

#include <benchmark/benchmark.h>

#include <cstddef>

namespace {

using namespace stochflow;

struct Workload {
    OperatorFamily family = random_family(4, 2, 0.6, 0.2, 1);
    MonteCarloSetup setup{TimeGrid(0.0, 1.0, 256), 2, 64, 99};

    double path(std::size_t i) const {
        return operator_norm(euler_flow(std::nullopt, family, replicate_paths(setup, i)).terminal());
    }
};

void BM_PathsSerial(benchmark::State& state) {
    const Workload w;
    for (auto _ : state) {
        auto out = parallel::map_serial(w.setup.n_paths, [&](std::size_t i) { return w.path(i); });
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.setup.n_paths));
}

void BM_PathsParallel(benchmark::State& state) {
    const Workload w;
    const parallel::ThreadScope scope(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto out = parallel::map(w.setup.n_paths, [&](std::size_t i) { return w.path(i); });
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.setup.n_paths));
}

void BM_MomentParallel(benchmark::State& state) {
    const Workload w;
    const parallel::ThreadScope scope(static_cast<int>(state.range(0)));
    const FlowBuilder build = [&](const WienerPaths& p) { return euler_flow(std::nullopt, w.family, p); };
    for (auto _ : state) benchmark::DoNotOptimize(mc_moment(build, w.setup, 2.0).value);
}

}  // namespace

BENCHMARK(BM_PathsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PathsParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MomentParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
