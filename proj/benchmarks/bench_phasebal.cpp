#include <benchmark/benchmark.h>

#include "phasebal/scenarios.hpp"
#include "phasebal/storage.hpp"

using namespace phasebal;

static void BM_SolveSnapshot(benchmark::State& state) {
    const Scenario sc = build_sweep_scenario(5.0, NodeId{"N5"}, DeviceKind::DG, 120.0, NetworkClass::Compact);
    const Injections inj = rated_injections(sc.feeder);
    for (auto _ : state) benchmark::DoNotOptimize(solve_snapshot(sc.feeder, inj));
}
BENCHMARK(BM_SolveSnapshot);

// Longer chains: cost of one sweep grows linearly in the node count.
static void BM_SolveSnapshotChain(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    FeederSpec spec = chain_spec(n, 0.05);
    for (std::size_t k = 1; k < n; ++k) {
        Device d;
        d.id = "L" + std::to_string(k);
        d.node = spec.nodes[k];
        d.connection = PhaseConnection::single(kPhases[k % 3]);
        d.kind = DeviceKind::Load;
        d.s_rated_kva = {1.5, 0.3};
        spec.devices.push_back(d);
    }
    const Feeder f = build_feeder(spec);
    const Injections inj = rated_injections(f);
    for (auto _ : state) benchmark::DoNotOptimize(solve_snapshot(f, inj));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveSnapshotChain)->RangeMultiplier(4)->Range(8, 512)->Complexity(benchmark::oN);

static void BM_OracleSolve(benchmark::State& state) {
    const Scenario sc = build_sweep_scenario(5.0, NodeId{"N5"}, DeviceKind::DG, 120.0, NetworkClass::Compact);
    const Injections inj = rated_injections(sc.feeder);
    for (auto _ : state) benchmark::DoNotOptimize(oracle_solve(sc.feeder, inj));
}
BENCHMARK(BM_OracleSolve);

static void BM_RunPreset(benchmark::State& state, const char* name) {
    const Scenario sc = make_preset(name);
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(sc));
}
BENCHMARK_CAPTURE(BM_RunPreset, stylized_nostorage, "stylized-nostorage");
BENCHMARK_CAPTURE(BM_RunPreset, a2_n5_noshift, "a2-n5-noshift");

static void BM_Sweep(benchmark::State& state) {
    const auto jobs = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep_and_tabulate({}, standard_penetration_grid(), {NodeId{"N1"}, NodeId{"N5"}},
                                                    {DeviceKind::DG, DeviceKind::EV}, {}, jobs));
    }
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_GreedyController(benchmark::State& state) {
    std::vector<BatterySite> sites;
    for (const Phase p : kPhases) {
        sites.push_back({Battery::sized("B" + std::string(to_string(p)), 1.0, 2.5), NodeId{"N5"}, p});
    }
    const Architecture arch{Architecture::Kind::A3, state.range(0) != 0};
    for (auto _ : state) benchmark::DoNotOptimize(greedy_balance_controller({14.0, 9.5, 6.25}, arch, sites, 1.0));
}
BENCHMARK(BM_GreedyController)->Arg(0)->Arg(1);
BENCHMARK_MAIN();
