#include <benchmark/benchmark.h>

#include "madm/qcalc.hpp"

using namespace madm;

static void BM_JacksonIntegral(benchmark::State& state) {
    const QParam q(state.range(0) / 100.0);
    const TruncationPolicy pol;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            jackson_integral([](double t) { return 1.0 / (1.0 - t); }, 0.2, 0.45, q, pol));
    }
}
BENCHMARK(BM_JacksonIntegral)->Arg(30)->Arg(60)->Arg(90);

static void BM_Phi(benchmark::State& state) {
    const QParam q(0.6);
    const TruncationPolicy pol;
    for (auto _ : state) {
        benchmark::DoNotOptimize(phi(0, 0.5, q, pol));
    }
}
BENCHMARK(BM_Phi);

static void BM_QNumber(benchmark::State& state) {
    const QParam q(0.6);
    long k = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(q_number(k, q));
        k = k % 64 + 1;
    }
}
BENCHMARK(BM_QNumber);

BENCHMARK_MAIN();
