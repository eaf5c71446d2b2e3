#include <benchmark/benchmark.h>

#include <random>

#include "stocnull/discrete_calc.hpp"
#include "stocnull/forward_solver.hpp"
#include "stocnull/hum.hpp"
#include "stocnull/noise_tree.hpp"

using namespace stocnull;

namespace {

GridFunction ramp(const Mesh& mesh) {
    return GridFunction::from_function(mesh, [](double x) { return x * (1.0 - x); });
}

void BM_DriftSolve(benchmark::State& state) {
    const Mesh mesh = Mesh::build(static_cast<int>(state.range(0)));
    const GridFunction a1 = GridFunction::from_function(mesh, [](double) { return 0.5; });
    const GridFunction rhs = ramp(mesh);
    for (auto _ : state) benchmark::DoNotOptimize(solve_drift_implicit(mesh, 1e-2, a1, rhs));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DriftSolve)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oN);

void BM_ForwardSolve(benchmark::State& state) {
    const Mesh mesh = Mesh::build(16);
    const ScenarioTree tree = ScenarioTree::build(static_cast<int>(state.range(0)), 1.0);
    const Coefficients coeffs = Coefficients::constant(tree, mesh, 0.5, 0.5);
    const GridFunction y0 = ramp(mesh);
    for (auto _ : state) benchmark::DoNotOptimize(solve_free(y0, coeffs, tree, mesh));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(ScenarioTree::node_count(tree.depth())));
}
BENCHMARK(BM_ForwardSolve)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);

void BM_GramianApply(benchmark::State& state) {
    const Mesh mesh = Mesh::build(16);
    const ScenarioTree tree = ScenarioTree::build(static_cast<int>(state.range(0)), 1.0);
    const Coefficients coeffs = Coefficients::constant(tree, mesh, 0.5, 0.5);
    const Region region = Region::from_interval(mesh, {0.3, 0.7});
    std::mt19937_64 rng(7);
    const LevelField zT = random_level_field(tree.depth(), 16, rng);
    for (auto _ : state) benchmark::DoNotOptimize(gramian_apply(zT, coeffs, region, tree, mesh));
}
BENCHMARK(BM_GramianApply)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
