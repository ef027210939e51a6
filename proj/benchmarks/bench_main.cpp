#include "rotorgw/cdf_operator.hpp"
#include "rotorgw/frontier.hpp"
#include "rotorgw/rotor_walk.hpp"
#include "rotorgw/srw_gamma.hpp"

#include <benchmark/benchmark.h>

using namespace rotorgw;

static void BM_EscapeCount(benchmark::State& state) {
  const auto xi = OffspringDistribution::deterministic(3);
  const RotorMatrix q = RotorMatrix::uniform();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    TreeArena arena(xi, 1);
    benchmark::DoNotOptimize(escape_count(arena, q, n, 16).escapes);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EscapeCount)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

static void BM_BuildFrontier(benchmark::State& state) {
  const auto xi = OffspringDistribution::parse("p2=1/2,p3=1/2");
  const RotorMatrix q = RotorMatrix::uniform();
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    TreeArena arena(xi, 1);
    benchmark::DoNotOptimize(build_frontier(arena, q, n).frontier_size);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildFrontier)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

static void BM_AuditProportion(benchmark::State& state) {
  const auto xi = OffspringDistribution::parse("p1=1/2,p3=1/2");
  TreeArena arena(xi, 1);
  const FrontierState st = build_frontier(arena, RotorMatrix::uniform(), static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(audit_proportion(arena, st).K);
}
BENCHMARK(BM_AuditProportion)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

static void BM_SolveHittingLevel(benchmark::State& state) {
  const auto xi = OffspringDistribution::parse("p1=1/2,p3=1/2");
  const int H = static_cast<int>(state.range(0));
  TreeArena arena(xi, 1);
  truncate_view(arena, H);
  for (auto _ : state) benchmark::DoNotOptimize(solve_hitting_level(arena, H).root);
}
BENCHMARK(BM_SolveHittingLevel)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_GammaBounds(benchmark::State& state) {
  const auto xi = OffspringDistribution::parse("p1=1/2,p3=1/2");
  const KeyedTree tree(xi, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gamma_bounds(tree, static_cast<int>(state.range(0))).upper);
}
BENCHMARK(BM_GammaBounds)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_CdfOperator(benchmark::State& state) {
  const auto xi = OffspringDistribution::parse("p1=1/2,p3=1/2");
  const auto F = DiscretizedCDF::uniform(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(apply_cdf_operator(F, xi).mean());
}
BENCHMARK(BM_CdfOperator)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
