#include <benchmark/benchmark.h>

#include "madm/steady.hpp"

using namespace madm;

namespace {

Configuration box_corner(int n, int m) { return Configuration(std::vector<int>(n, m)); }

}  // namespace

// fresh evaluator per iteration: measures a cold evaluation including the
// memo build-up
static void BM_RecursionCold(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ModelParams p(QParam(0.6), 0.2, 0.8, n);
    for (auto _ : state) {
        SteadyStateEvaluator ev(p, {});
        benchmark::DoNotOptimize(ev.unnormalized(box_corner(n, 3)));
    }
}
BENCHMARK(BM_RecursionCold)->Arg(1)->Arg(2)->Arg(3);

static void BM_GridCold(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ModelParams p(QParam(0.6), 0.2, 0.8, n);
    for (auto _ : state) {
        SteadyStateEvaluator ev(p, {});
        benchmark::DoNotOptimize(ev.unnormalized_grid(box_corner(n, 3)));
    }
}
BENCHMARK(BM_GridCold)->Arg(1)->Arg(2)->Arg(3);

// warm evaluator: the memoized path a box scan actually exercises
static void BM_RecursionWarmBox(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ModelParams p(QParam(0.6), 0.2, 0.8, n);
    SteadyStateEvaluator ev(p, {});
    std::vector<Configuration> box;
    for (int m = 0; m <= 4; ++m) box.push_back(box_corner(n, m));
    for (auto _ : state) {
        double acc = 0.0;
        for (const auto& c : box) acc += ev.unnormalized(c);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_RecursionWarmBox)->Arg(2)->Arg(3);

static void BM_Normalization(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ModelParams p(QParam(0.9), 0.5, 0.5, n);
    for (auto _ : state) {
        SteadyStateEvaluator ev(p, {});
        benchmark::DoNotOptimize(ev.normalization());
    }
}
BENCHMARK(BM_Normalization)->Arg(1)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
