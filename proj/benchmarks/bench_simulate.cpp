#include <benchmark/benchmark.h>

#include "madm/simulate.hpp"

using namespace madm;

static void BM_Step(benchmark::State& state) {
    ModelParams p(QParam(0.5), 0.2, 0.4, static_cast<int>(state.range(0)));
    const TruncationPolicy pol;
    Xoshiro256StarStar rng(1);
    Configuration c = Configuration::zeros(p.n_sites);
    long events = 0;
    for (auto _ : state) {
        StepResult s = step(c, rng, p, pol);
        c = std::move(s.next);
        ++events;
    }
    state.SetItemsProcessed(events);
}
BENCHMARK(BM_Step)->Arg(1)->Arg(2)->Arg(4);

static void BM_Run(benchmark::State& state) {
    SimConfig cfg{ModelParams(QParam(0.5), 0.2, 0.4, 2)};
    cfg.seed = 3;
    cfg.t_burn = 10.0;
    cfg.t_measure = static_cast<double>(state.range(0));
    cfg.replicas = 2;
    cfg.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(cfg));
    }
}
BENCHMARK(BM_Run)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_InjectionSize(benchmark::State& state) {
    const QParam q(0.5);
    const TruncationPolicy pol;
    Xoshiro256StarStar rng(9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_injection_size(0.5, q, rng.uniform01(), pol));
    }
}
BENCHMARK(BM_InjectionSize);

BENCHMARK_MAIN();
