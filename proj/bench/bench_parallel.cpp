// Serial reference kernels against their OpenMP counterparts.
// Thread count for the parallel runs comes from OMP_NUM_THREADS.

#include "iontrap/config.hpp"
#include "iontrap/dynamics.hpp"
#include "iontrap/stability.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

using namespace iontrap;

namespace {

Scenario bench_scenario() {
    auto s = ExperimentConfig::defaults().scenario;
    s.timeline.hold = 0.5e-3;
    return s;
}

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        v.push_back(lo + (hi - lo) * i / (n - 1));
    }
    return v;
}

void BM_EnsembleSerial(benchmark::State& state) {
    const auto s = bench_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ensemble_outcomes_serial(state.range(0), s));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnsembleParallel(benchmark::State& state) {
    const auto s = bench_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ensemble_outcomes(state.range(0), s));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_RasterSerial(benchmark::State& state) {
    const auto a = grid(-0.2, 0.2, static_cast<int>(state.range(0)));
    const auto q = grid(0.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(stability_raster_serial(a, q));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_RasterParallel(benchmark::State& state) {
    const auto a = grid(-0.2, 0.2, static_cast<int>(state.range(0)));
    const auto q = grid(0.0, 1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(stability_raster(a, q));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
    state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RasterSerial)->Arg(16)->Arg(48)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RasterParallel)->Arg(16)->Arg(48)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
