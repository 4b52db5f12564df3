// Forward (value) and forward+backward (value + flow) pass costs of the
// smoothed path oracle, reported separately so the backward overhead is the
// difference between the two series.

#include <benchmark/benchmark.h>

#include <string>

#include "nesteq/softpath.hpp"

using namespace nesteq;

namespace {

// width parallel middle nodes between s and t, two edges per route.
HierNetwork layered_net(int width, int levels) {
  HierNetwork net;
  for (int k = 0; k < levels; ++k) {
    const std::string p = "L" + std::to_string(k) + "_";
    LevelGraph g;
    g.nodes = {p + "s", p + "t"};
    for (int i = 0; i < width; ++i) {
      const std::string m = p + "m" + std::to_string(i);
      g.nodes.push_back(m);
      g.edges.push_back({p + "a" + std::to_string(i), p + "s", m, EdgeKind::Cost,
                         CostParams::affine(1.0 + 0.1 * i, 0.5), -1});
      g.edges.push_back({p + "b" + std::to_string(i), m, p + "t", EdgeKind::Cost,
                         CostParams::bpr(1.0, 2.0, 0.5, 2.0 + i % 3), -1});
    }
    if (k + 1 < levels) {
      g.edges.push_back({p + "x", p + "s", p + "t", EdgeKind::Expansion, {}, 0});
    }
    g.od_pairs = {{p + "s", p + "t"}};
    g.hop_limit = 2;
    net.levels.push_back(std::move(g));
  }
  net.gamma.assign(levels, 0.25);
  net.demands = {10.0};
  return net;
}

void BM_SoftValues(benchmark::State& state) {
  const auto net = compile(layered_net(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1))));
  const TollVector t = free_flow_tolls(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_dp(net, t));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SoftValues)->Args({4, 1})->Args({16, 1})->Args({64, 1})->Args({16, 3});

void BM_SoftFlows(benchmark::State& state) {
  const auto net = compile(layered_net(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1))));
  const TollVector t = free_flow_tolls(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft_flows(net, t));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SoftFlows)->Args({4, 1})->Args({16, 1})->Args({64, 1})->Args({16, 3});

} // namespace

BENCHMARK_MAIN();
