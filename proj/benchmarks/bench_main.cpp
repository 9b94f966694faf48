#include <benchmark/benchmark.h>

#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/mesh.hpp"
#include "torsionlab/shapeflow.hpp"
#include "torsionlab/torsion.hpp"

using namespace tlab;

namespace {

const StarDomain& cos3() {
  static const StarDomain d = StarDomain::fourier(1.0, {0.0, 0.0, 0.1}, {});
  return d;
}

void BM_SampleBoundary(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_boundary(cos3(), m));
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_SampleBoundary)->Arg(512)->Arg(2048)->Arg(8192);

void BM_BuildMesh(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_mesh(cos3(), level));
}
BENCHMARK(BM_BuildMesh)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_SolveTorsion(benchmark::State& state) {
  const TriMesh mesh = build_mesh(cos3(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_torsion(mesh));
  state.counters["nodes"] = mesh.node_count();
}
BENCHMARK(BM_SolveTorsion)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_VerifySolution(benchmark::State& state) {
  const TorsionSolution sol = solve_torsion(build_mesh(cos3(), static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(verify_solution(sol));
}
BENCHMARK(BM_VerifySolution)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DualNorm(benchmark::State& state) {
  const TorsionSolution sol = solve_torsion(build_mesh(StarDomain::ellipse(1.2, 1.0 / 1.2), 4));
  for (auto _ : state) benchmark::DoNotOptimize(dual_norm(sol, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_DualNorm)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_FlowStep(benchmark::State& state) {
  FlowOptions opt;
  opt.level = static_cast<int>(state.range(0));
  opt.orientation = FlowOrientation::kTowardBall;
  const FlowState start = initial_flow_state(cos3(), opt);
  for (auto _ : state) benchmark::DoNotOptimize(flow_step(start, 0.05, opt));
}
BENCHMARK(BM_FlowStep)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
