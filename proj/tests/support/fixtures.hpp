#pragma once

// Fixture networks shared by the unit and acceptance suites.

#include <algorithm>
#include <random>
#include <string>

#include "nesteq/network.hpp"

namespace testsupport {

using namespace nesteq;

// Two parallel routes s -> t: a constant-cost road and a congestible one.
inline HierNetwork pigou(double gamma = 0.1, double demand = 1.0,
                         double constant_cost = 1.0) {
  HierNetwork net;
  LevelGraph g;
  g.nodes = {"s", "t"};
  g.edges = {
      {"top", "s", "t", EdgeKind::Cost, CostParams::constant(constant_cost), -1},
      {"low", "s", "t", EdgeKind::Cost, CostParams::affine(0.0, 1.0), -1},
  };
  g.od_pairs = {{"s", "t"}};
  g.hop_limit = 1;
  net.levels = {g};
  net.gamma = {gamma};
  net.demands = {demand};
  return net;
}

// n identical affine edges in parallel.
inline HierNetwork parallel_identical(int n, double gamma, double demand,
                                      double t0 = 1.0, double slope = 1.0) {
  HierNetwork net;
  LevelGraph g;
  g.nodes = {"s", "t"};
  for (int i = 0; i < n; ++i) {
    g.edges.push_back({"e" + std::to_string(i), "s", "t", EdgeKind::Cost,
                       CostParams::affine(t0, slope), -1});
  }
  g.od_pairs = {{"s", "t"}};
  g.hop_limit = 1;
  net.levels = {g};
  net.gamma = {gamma};
  net.demands = {demand};
  return net;
}

// Level 1: a direct road in parallel with an expansion edge that opens a
// two-route level-2 pair. 3 nested paths.
inline HierNetwork two_level(double gamma1, double gamma2, double demand = 1.0) {
  HierNetwork net;
  LevelGraph l1;
  l1.nodes = {"s", "t"};
  l1.edges = {
      {"direct", "s", "t", EdgeKind::Cost, CostParams::affine(1.0, 0.5), -1},
      {"x", "s", "t", EdgeKind::Expansion, {}, 0},
  };
  l1.od_pairs = {{"s", "t"}};
  l1.hop_limit = 1;

  LevelGraph l2;
  l2.nodes = {"o", "d"};
  l2.edges = {
      {"inner_a", "o", "d", EdgeKind::Cost, CostParams::constant(1.0), -1},
      {"inner_b", "o", "d", EdgeKind::Cost, CostParams::affine(0.5, 1.0), -1},
  };
  l2.od_pairs = {{"o", "d"}};
  l2.hop_limit = 1;

  net.levels = {l1, l2};
  net.gamma = {gamma1, gamma2};
  net.demands = {demand};
  return net;
}

// Three levels chained through single expansion edges; 4 nested paths.
inline HierNetwork three_level(double g1, double g2, double g3, double demand = 1.0) {
  HierNetwork net;
  LevelGraph l1;
  l1.nodes = {"s", "t"};
  l1.edges = {
      {"c1", "s", "t", EdgeKind::Cost, CostParams::affine(1.0, 0.3), -1},
      {"e1", "s", "t", EdgeKind::Expansion, {}, 0},
  };
  l1.od_pairs = {{"s", "t"}};
  l1.hop_limit = 1;

  LevelGraph l2;
  l2.nodes = {"o2", "d2"};
  l2.edges = {
      {"c2", "o2", "d2", EdgeKind::Cost, CostParams::constant(0.8), -1},
      {"e2", "o2", "d2", EdgeKind::Expansion, {}, 0},
  };
  l2.od_pairs = {{"o2", "d2"}};
  l2.hop_limit = 1;

  LevelGraph l3;
  l3.nodes = {"o3", "d3"};
  l3.edges = {
      {"c3", "o3", "d3", EdgeKind::Cost, CostParams::affine(0.2, 0.5), -1},
      {"c4", "o3", "d3", EdgeKind::Cost, CostParams::constant(0.6), -1},
  };
  l3.od_pairs = {{"o3", "d3"}};
  l3.hop_limit = 1;

  net.levels = {l1, l2, l3};
  net.gamma = {g1, g2, g3};
  net.demands = {demand};
  return net;
}

// Six parallel affine routes with spread free-flow costs and slopes at a low
// temperature: slow enough that the duality gap decays visibly over a few
// hundred iterations instead of flooring at once.
inline HierNetwork hetero_parallel(double gamma = 0.05, double demand = 4.0) {
  HierNetwork net = parallel_identical(6, gamma, demand);
  for (int i = 0; i < 6; ++i) {
    net.levels[0].edges[i].cost = CostParams::affine(0.5 + 0.37 * i, 0.3 + 0.5 * i);
  }
  return net;
}

// A capacity edge next to a congestible alternative; the capacity binds at
// demand 2 (free-flow split would put 1.5 units on the capacitated road).
inline HierNetwork capacitated(double gamma = 0.05, double demand = 2.0) {
  HierNetwork net;
  LevelGraph g;
  g.nodes = {"s", "t"};
  g.edges = {
      {"cap", "s", "t", EdgeKind::Cost, CostParams::capacity_limited(1.0, 1.0), -1},
      {"alt", "s", "t", EdgeKind::Cost, CostParams::affine(0.5, 1.0), -1},
  };
  g.od_pairs = {{"s", "t"}};
  g.hop_limit = 1;
  net.levels = {g};
  net.gamma = {gamma};
  net.demands = {demand};
  return net;
}

// Same routes with the capacity edge replaced by a steep BPR approximation
// (beta = 1/mu homotopy member).
inline HierNetwork capacitated_bpr(double beta, double gamma = 0.05,
                                   double demand = 2.0) {
  HierNetwork net = capacitated(gamma, demand);
  net.levels[0].edges[0].cost = CostParams::bpr(1.0, 1.0, 1.0, beta);
  return net;
}

// A cycle through the destination: walks may pass t and come back, and the
// expansion edge can be crossed twice within the hop limit (each traversal
// carries its own sub-choice).
inline HierNetwork cyclic_two_level(double gamma1 = 0.6, double gamma2 = 0.4,
                                    double demand = 1.0) {
  HierNetwork net;
  LevelGraph l1;
  l1.nodes = {"s", "t"};
  l1.edges = {
      {"back", "t", "s", EdgeKind::Cost, CostParams::constant(0.3), -1},
      {"fwd", "s", "t", EdgeKind::Cost, CostParams::affine(0.5, 0.2), -1},
      {"x", "s", "t", EdgeKind::Expansion, {}, 0},
  };
  l1.od_pairs = {{"s", "t"}};
  l1.hop_limit = 3;

  LevelGraph l2;
  l2.nodes = {"o", "d"};
  l2.edges = {
      {"ia", "o", "d", EdgeKind::Cost, CostParams::constant(0.7), -1},
      {"ib", "o", "d", EdgeKind::Cost, CostParams::affine(0.2, 0.5), -1},
  };
  l2.od_pairs = {{"o", "d"}};
  l2.hop_limit = 1;

  net.levels = {l1, l2};
  net.gamma = {gamma1, gamma2};
  net.demands = {demand};
  return net;
}

// Two origins into a shared destination at level 1, and two expansion edges
// opening distinct OD pairs of a shared level-2 graph.
inline HierNetwork multi_od(double gamma1 = 0.5, double gamma2 = 0.3) {
  HierNetwork net;
  LevelGraph l1;
  l1.nodes = {"a", "b", "m", "t"};
  l1.edges = {
      {"am", "a", "m", EdgeKind::Cost, CostParams::affine(0.4, 0.3), -1},
      {"at", "a", "t", EdgeKind::Cost, CostParams::constant(1.2), -1},
      {"bm", "b", "m", EdgeKind::Cost, CostParams::affine(0.6, 0.2), -1},
      {"x1", "m", "t", EdgeKind::Expansion, {}, 0},
      {"x2", "b", "t", EdgeKind::Expansion, {}, 1},
  };
  l1.od_pairs = {{"a", "t"}, {"b", "t"}};
  l1.hop_limit = 3;

  LevelGraph l2;
  l2.nodes = {"o1", "o2", "d"};
  l2.edges = {
      {"p1", "o1", "d", EdgeKind::Cost, CostParams::affine(0.5, 0.4), -1},
      {"p2", "o1", "d", EdgeKind::Cost, CostParams::constant(0.9), -1},
      {"q1", "o2", "d", EdgeKind::Cost, CostParams::bpr(0.6, 1.0, 0.8, 2.0), -1},
      {"q2", "o2", "d", EdgeKind::Cost, CostParams::constant(1.1), -1},
  };
  l2.od_pairs = {{"o1", "d"}, {"o2", "d"}};
  l2.hop_limit = 1;

  net.levels = {l1, l2};
  net.gamma = {gamma1, gamma2};
  net.demands = {1.3, 0.9};
  return net;
}

// Random layered hierarchy for property tests: every level is a small DAG
// of parallel/serial routes, reachability guaranteed by construction.
inline HierNetwork random_net(std::mt19937_64& rng, int max_levels = 3,
                              int max_edges_per_level = 8) {
  std::uniform_int_distribution<int> level_count(1, max_levels);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int m = level_count(rng);

  HierNetwork net;
  net.levels.resize(m);
  for (int k = 0; k < m; ++k) {
    LevelGraph& g = net.levels[k];
    const std::string p = "L" + std::to_string(k) + "_";
    std::uniform_int_distribution<int> mid_count(0, 2);
    const int mids = mid_count(rng);
    g.nodes = {p + "s", p + "t"};
    for (int i = 0; i < mids; ++i) g.nodes.push_back(p + "m" + std::to_string(i));
    g.od_pairs = {{p + "s", p + "t"}};
    g.hop_limit = mids + 1;

    auto random_cost = [&]() {
      const double r = unif(rng);
      if (r < 0.4) return CostParams::affine(0.2 + unif(rng), 0.2 + unif(rng));
      if (r < 0.7) return CostParams::constant(0.2 + unif(rng));
      return CostParams::bpr(0.5 + unif(rng), 0.5 + unif(rng), 0.5 + unif(rng),
                             1.0 + 2.0 * unif(rng));
    };

    int eid = 0;
    auto add_edge = [&](const std::string& tail, const std::string& head) {
      g.edges.push_back({p + "e" + std::to_string(eid++), tail, head, EdgeKind::Cost,
                         random_cost(), -1});
    };
    add_edge(p + "s", p + "t"); // direct route keeps every OD reachable
    std::vector<std::string> hubs = {p + "s"};
    for (int i = 0; i < mids; ++i) hubs.push_back(p + "m" + std::to_string(i));
    hubs.push_back(p + "t");
    const int budget = max_edges_per_level - (k + 1 < m ? 1 : 0);
    auto add_random_edge = [&] {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(hubs.size()) - 2);
      const int a = pick(rng);
      std::uniform_int_distribution<int> pick_b(a + 1, static_cast<int>(hubs.size()) - 1);
      add_edge(hubs[a], hubs[pick_b(rng)]);
    };
    while (static_cast<int>(g.edges.size()) < std::min(budget, 2 + mids)) {
      add_random_edge();
    }
    while (static_cast<int>(g.edges.size()) < budget && unif(rng) < 0.4) {
      add_random_edge();
    }
    // One expansion edge per non-final level, in parallel with the rest.
    if (k + 1 < m) {
      g.edges.push_back({p + "x", p + "s", p + "t", EdgeKind::Expansion, {}, 0});
    }
  }
  net.gamma.resize(m);
  for (double& g : net.gamma) g = 0.05 + 1.95 * unif(rng);
  net.demands = {0.5 + 1.5 * unif(rng)};
  return net;
}

} // namespace testsupport
