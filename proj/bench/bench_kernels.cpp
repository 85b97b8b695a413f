// Serial reference against OpenMP kernels. Argument 0 runs Execution::Serial, 1 runs Execution::Parallel.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "fracwave/forward.hpp"
#include "fracwave/laplace.hpp"
#include "fracwave/mittag_leffler.hpp"

using namespace fracwave;

namespace {

DampingModel three_term() {
    DampingModel m;
    m.big_lambda = 4.0;
    m.damping = {{0.25, 1.0, 0.2}, {0.5, 1.0, 0.25}, {0.75, 1.0, 0.1}};
    return m;
}

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::Serial : Execution::Parallel; }

void label(benchmark::State& state, std::size_t items) {
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * items));
    state.counters["threads"] = state.range(0) == 0 ? 1 : omp_get_max_threads();
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_SolveTrace(benchmark::State& state) {
    const DampingModel m = three_term();
    Excitation e;
    e.kind = ExcitationKind::InitialVelocity;
    const auto t = uniform_grid(0.0, 40.0, 8001);
    SolveOptions opts;
    opts.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(solve_trace(m, e, t, opts));
    label(state, t.size());
}
BENCHMARK(BM_SolveTrace)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SolveTraceSource(benchmark::State& state) {
    DampingModel m;
    m.big_lambda = 4.0;
    m.damping = {{0.5, 1.0, 0.1}};
    Excitation e;
    e.kind = ExcitationKind::Source;
    e.sigma = SourceProfile::constant();
    const auto t = uniform_grid(0.0, 20.0, 2001);
    SolveOptions opts;
    opts.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(solve_trace(m, e, t, opts));
    label(state, t.size());
}
BENCHMARK(BM_SolveTraceSource)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DampingForce(benchmark::State& state) {
    DampingModel m;
    m.big_lambda = 1.0;
    m.damping = {{0.2, 1.0, 0.1}, {0.25, 1.0, 0.1}};
    Excitation e;
    e.kind = ExcitationKind::InitialVelocity;
    const auto t = uniform_grid(1e-4, 0.1, 1000);
    SolveOptions opts;
    opts.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(solve_damping_force(m, e, t, opts));
    label(state, t.size());
}
BENCHMARK(BM_DampingForce)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LaplaceTransform(benchmark::State& state) {
    Excitation e;
    e.kind = ExcitationKind::InitialVelocity;
    const TimeTrace tr = solve_trace(three_term(), e, uniform_grid(0.0, 40.0, 160001));
    const auto s = geometric_grid(0.5, 16.0, 24);
    for (auto _ : state) benchmark::DoNotOptimize(laplace_transform(tr, s, mode(state)));
    label(state, s.size());
}
BENCHMARK(BM_LaplaceTransform)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Single evaluations per regime; no parallel variant.
void BM_MittagLeffler(benchmark::State& state) {
    const double r = static_cast<double>(state.range(0));
    const cplx z = std::polar(r, 2.5);
    for (auto _ : state) benchmark::DoNotOptimize(ml_scalar(0.25, 1.0, z));
    state.SetLabel(r <= 1.0 ? "series" : r < 50.0 ? "contour" : "asymptotic");
}
BENCHMARK(BM_MittagLeffler)->Arg(1)->Arg(3)->Arg(20)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
