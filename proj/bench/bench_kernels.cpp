// OpenMP kernels against their serial references. Thread count follows
// OMP_NUM_THREADS / SEQCL_NUM_THREADS.

#include "seqcl/cli.hpp"
#include "seqcl/oc.hpp"
#include "seqcl/sim.hpp"

#include <benchmark/benchmark.h>

using namespace seqcl;

namespace {

const MultiHypPlan& plan()
{
    static const MultiHypPlan p = [] {
        const auto d = one_sided_design(DistributionModel::bernoulli(), LimitFamily::exact(), 0.4, 0.6, 0.05, 0.05, 0.43);
        ScheduleSpec sc;
        sc.stages = 5;
        return build_plan(d, PlanKind::one_sided, sc);
    }();
    return p;
}

void BM_oc_parallel(benchmark::State& state)
{
    const auto grid = make_grid(0.0, 1.0, 1.0 / static_cast<double>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(oc_curve(plan(), grid));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

void BM_oc_serial(benchmark::State& state)
{
    const auto grid = make_grid(0.0, 1.0, 1.0 / static_cast<double>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(oc_curve_serial(plan(), grid));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

void BM_sim_parallel(benchmark::State& state)
{
    const auto r = plan_runner(plan());
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate(r, 0.5, state.range(0), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_sim_serial(benchmark::State& state)
{
    const auto r = plan_runner(plan());
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_serial(r, 0.5, state.range(0), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_oc_parallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_oc_serial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sim_parallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sim_serial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv)
{
    apply_thread_env();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv))
        return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
