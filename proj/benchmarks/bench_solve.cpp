#include <benchmark/benchmark.h>

#include <string>

#include "nesteq/dualsolve.hpp"

using namespace nesteq;

namespace {

HierNetwork parallel_net(int routes) {
  HierNetwork net;
  LevelGraph g;
  g.nodes = {"s", "t"};
  for (int i = 0; i < routes; ++i) {
    g.edges.push_back({"e" + std::to_string(i), "s", "t", EdgeKind::Cost,
                       CostParams::affine(0.5 + 0.37 * i, 0.3 + 0.2 * i), -1});
  }
  g.od_pairs = {{"s", "t"}};
  g.hop_limit = 1;
  net.levels = {g};
  net.gamma = {0.05};
  net.demands = {4.0};
  return net;
}

// Cost of a fixed iteration budget (one gradient + one value evaluation per
// accepted step, plus checkpoint reconstructions).
void BM_SolveIterations(benchmark::State& state) {
  const auto net = compile(parallel_net(static_cast<int>(state.range(0))));
  SolverConfig cfg;
  cfg.eps = 0.0;
  cfg.max_iters = 64;
  cfg.checkpoint_period = 16;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(net, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_SolveIterations)->Arg(4)->Arg(16)->Arg(64);

} // namespace

BENCHMARK_MAIN();
