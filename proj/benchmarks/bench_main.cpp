#include <benchmark/benchmark.h>

#include "fpp/dist.hpp"
#include "fpp/field.hpp"
#include "fpp/fpp.hpp"
#include "fpp/graph.hpp"
#include "fpp/regen.hpp"
#include "fpp/rng.hpp"

namespace {

using namespace fpp;

// per-edge weight evaluation (counter-based RNG + inverse CDF)
void BM_WeightEval(benchmark::State& state) {
  auto cell = build_tube(2, 2);
  WeightField f(Distribution::exponential(1), 42);
  long long level = 0;
  for (auto _ : state) {
    EdgeRef e{level++, EdgeRef::Kind::Inter, 0};
    benchmark::DoNotOptimize(f.weight(e));
  }
}
BENCHMARK(BM_WeightEval);

// windowed shortest-path sweep over a span of `range(0)` levels
void BM_WindowedDijkstra(benchmark::State& state) {
  auto cell = build_tube(2, 2);
  WeightField f(Distribution::exponential(1), 42);
  const long long n = state.range(0);
  for (auto _ : state) {
    Window w(cell, -50, n + 50);
    auto res = dijkstra(w, f, {VertexRef{0, 1}});
    benchmark::DoNotOptimize(res.T.back());
  }
  state.SetItemsProcessed(state.iterations() * (n + 100) * cell.K);
}
BENCHMARK(BM_WindowedDijkstra)->Arg(1000)->Arg(10000)->Arg(100000);

// regeneration-block scan: detect_A over candidate levels
void BM_RegenScan(benchmark::State& state) {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);
  WeightField f(dist, 42);
  const long long levels = state.range(0);
  const long long step = 2 * rp.M + 1;
  for (auto _ : state) {
    long long hits = 0;
    for (long long n = 0; n + rp.span() < levels; n += step)
      if (detect_A(cell, f, rp, n)) ++hits;
    benchmark::DoNotOptimize(hits);
  }
  state.SetItemsProcessed(state.iterations() * (levels / step));
}
BENCHMARK(BM_RegenScan)->Arg(10000)->Arg(100000);

// certified point-to-point travel time including window certification
void BM_CertifiedTravelTime(benchmark::State& state) {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  const long long n = state.range(0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    WeightField f(dist, derive_seed(7, seed++));
    auto t = travel_time(cell, f, {0, 1}, {n, 1});
    benchmark::DoNotOptimize(t.T);
  }
}
BENCHMARK(BM_CertifiedTravelTime)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
