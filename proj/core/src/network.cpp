#include "nesteq/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace nesteq {

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (const auto& v : violations) os << v << "\n";
  return os.str();
}

namespace {

int effective_hop_limit(const LevelGraph& g) {
  if (g.hop_limit > 0) return g.hop_limit;
  return std::max(1, static_cast<int>(g.nodes.size()) - 1);
}

// Reachability within `hops` edges (BFS over (node, depth)).
bool reachable_within(const std::vector<std::vector<int>>& out,
                      const std::vector<Edge>& edges,
                      const std::unordered_map<NodeId, int>& index, const NodeId& from,
                      const NodeId& to, int hops) {
  auto fi = index.find(from);
  auto ti = index.find(to);
  if (fi == index.end() || ti == index.end()) return false;
  std::vector<char> seen(out.size(), 0);
  std::vector<int> frontier{fi->second};
  seen[fi->second] = 1;
  for (int depth = 0; depth < hops; ++depth) {
    std::vector<int> next;
    for (int v : frontier) {
      for (int e : out[v]) {
        auto hi = index.find(edges[e].head);
        if (hi == index.end()) continue;
        if (hi->second == ti->second) return true;
        if (!seen[hi->second]) {
          seen[hi->second] = 1;
          next.push_back(hi->second);
        }
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return false;
}

} // namespace

ValidationReport validate(const HierNetwork& net) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

  const int m = net.level_count();
  if (m < 1) {
    fail("network must have at least one level");
    return rep;
  }
  if (static_cast<int>(net.gamma.size()) != m) {
    fail("gamma must list one temperature per level");
  }
  for (int k = 0; k < static_cast<int>(net.gamma.size()); ++k) {
    if (!(net.gamma[k] > 0.0) || !std::isfinite(net.gamma[k])) {
      fail("nonpositive temperature: gamma[" + std::to_string(k + 1) + "]");
    }
  }

  std::set<EdgeId> all_edge_ids;
  for (int k = 0; k < m; ++k) {
    const LevelGraph& g = net.levels[k];
    const std::string lv = "level " + std::to_string(k + 1) + ": ";

    std::unordered_map<NodeId, int> index;
    for (const auto& n : g.nodes) {
      if (!index.emplace(n, static_cast<int>(index.size())).second) {
        fail(lv + "duplicate node id '" + n + "'");
      }
    }

    std::vector<std::vector<int>> out(g.nodes.size());
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
      const Edge& edge = g.edges[e];
      if (!all_edge_ids.insert(edge.id).second) {
        fail(lv + "duplicate edge id '" + edge.id + "'");
      }
      auto ti = index.find(edge.tail);
      auto hi = index.find(edge.head);
      if (ti == index.end()) fail(lv + "edge '" + edge.id + "' has undeclared tail '" + edge.tail + "'");
      if (hi == index.end()) fail(lv + "edge '" + edge.id + "' has undeclared head '" + edge.head + "'");
      if (ti != index.end()) out[ti->second].push_back(e);

      if (edge.kind == EdgeKind::Cost) {
        const std::string err = edge.cost.check();
        if (!err.empty()) fail(lv + "edge '" + edge.id + "': " + err);
      } else {
        if (k == m - 1) {
          fail(lv + "expansion edge '" + edge.id + "' on the last level");
        } else if (edge.expands_to < 0 ||
                   edge.expands_to >= static_cast<int>(net.levels[k + 1].od_pairs.size())) {
          fail(lv + "dangling expansion: edge '" + edge.id + "' references OD index " +
               std::to_string(edge.expands_to) + " of level " + std::to_string(k + 2));
        }
      }
    }

    // Injectivity of the expansion -> OD mapping.
    std::set<int> targets;
    for (const Edge& edge : g.edges) {
      if (edge.kind != EdgeKind::Expansion || edge.expands_to < 0) continue;
      if (!targets.insert(edge.expands_to).second) {
        fail(lv + "expansion edge '" + edge.id + "' duplicates target OD index " +
             std::to_string(edge.expands_to));
      }
    }

    const int hops = effective_hop_limit(g);
    for (int w = 0; w < static_cast<int>(g.od_pairs.size()); ++w) {
      const OdPair& od = g.od_pairs[w];
      const std::string tag = lv + "od pair " + std::to_string(w) + " (" + od.origin +
                              " -> " + od.destination + ")";
      if (!index.count(od.origin)) {
        fail(tag + ": undeclared origin");
        continue;
      }
      if (!index.count(od.destination)) {
        fail(tag + ": undeclared destination");
        continue;
      }
      if (od.origin == od.destination) {
        fail(tag + ": origin equals destination");
        continue;
      }
      if (!reachable_within(out, g.edges, index, od.origin, od.destination, hops)) {
        fail(tag + ": unreachable within hop limit " + std::to_string(hops));
      }
    }
  }

  if (!net.levels.empty()) {
    if (net.demands.size() != net.levels[0].od_pairs.size()) {
      fail("demands must list one value per level-1 OD pair");
    }
    for (int w = 0; w < static_cast<int>(net.demands.size()); ++w) {
      if (!(net.demands[w] >= 0.0) || !std::isfinite(net.demands[w])) {
        fail("negative demand for level-1 OD pair " + std::to_string(w));
      }
    }
  }
  return rep;
}

std::pair<int, int> CompiledNetwork::cost_edge_location(int cost_index) const {
  return cost_locations.at(cost_index);
}

std::pair<int, int> CompiledNetwork::od_source(int level, int od) const {
  if (level == 0) return {-1, -1};
  const int e = od_source_edge[level][od];
  return e < 0 ? std::pair<int, int>{-1, -1} : std::pair<int, int>{level - 1, e};
}

CompiledNetwork compile(const HierNetwork& net) {
  ValidationReport rep = validate(net);
  if (!rep.ok()) throw Error("invalid network:\n" + rep.to_string());

  CompiledNetwork c;
  const int m = net.level_count();
  c.levels.resize(m);
  c.level1_demand = net.demands;

  for (int k = 0; k < m; ++k) {
    const LevelGraph& g = net.levels[k];
    CompiledLevel& lvl = c.levels[k];
    lvl.node_count = static_cast<int>(g.nodes.size());
    lvl.node_ids = g.nodes;
    lvl.hop_limit = effective_hop_limit(g);
    lvl.gamma = net.gamma[k];

    std::unordered_map<NodeId, int> index;
    for (int v = 0; v < lvl.node_count; ++v) index.emplace(g.nodes[v], v);

    lvl.edges.reserve(g.edges.size());
    for (const Edge& e : g.edges) {
      CompiledEdge ce;
      ce.id = e.id;
      ce.tail = index.at(e.tail);
      ce.head = index.at(e.head);
      ce.kind = e.kind;
      ce.cost = e.cost;
      ce.expands_to = e.expands_to;
      lvl.edges.push_back(std::move(ce));
    }
    // Canonical order everywhere: lexicographic by edge id.
    std::sort(lvl.edges.begin(), lvl.edges.end(),
              [](const CompiledEdge& a, const CompiledEdge& b) { return a.id < b.id; });

    lvl.out_edges.assign(lvl.node_count, {});
    for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
      lvl.out_edges[lvl.edges[e].tail].push_back(e);
    }

    lvl.ods.reserve(g.od_pairs.size());
    for (const OdPair& od : g.od_pairs) {
      CompiledOd cod;
      cod.origin = index.at(od.origin);
      cod.destination = index.at(od.destination);
      lvl.ods.push_back(cod);
    }
  }

  // Global cost / expansion indices and OD feeding edges.
  c.od_source_edge.resize(m);
  for (int k = 0; k < m; ++k) {
    c.od_source_edge[k].assign(c.levels[k].ods.size(), -1);
  }
  for (int k = 0; k < m; ++k) {
    CompiledLevel& lvl = c.levels[k];
    for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
      CompiledEdge& ce = lvl.edges[e];
      if (ce.kind == EdgeKind::Cost) {
        ce.cost_index = c.cost_edge_count++;
        c.cost_locations.emplace_back(k, e);
      } else {
        ce.expansion_index = c.expansion_edge_count++;
        c.expansion_locations.emplace_back(k, e);
        c.od_source_edge[k + 1][ce.expands_to] = e;
        c.levels[k + 1].ods[ce.expands_to].source_edge_id = ce.id;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> enumerate_walks(const CompiledLevel& level, int od,
                                              std::uint64_t cap) {
  const CompiledOd& w = level.ods[od];
  std::vector<std::vector<int>> result;
  std::vector<int> walk;

  // Depth-first over id-sorted out-edges gives lexicographic order. A walk
  // that reaches the destination is recorded and still extended (the DP
  // counts walks passing through the destination as well).
  auto dfs = [&](auto&& self, int node, int hops_left) -> void {
    if (node == w.destination && !walk.empty()) {
      if (result.size() >= cap) {
        throw PathExplosion("walk count exceeds cap " + std::to_string(cap));
      }
      result.push_back(walk);
    }
    if (hops_left == 0) return;
    for (int e : level.out_edges[node]) {
      walk.push_back(e);
      self(self, level.edges[e].head, hops_left - 1);
      walk.pop_back();
    }
  };
  dfs(dfs, w.origin, level.hop_limit);
  return result;
}

namespace {

// Per-level, per-OD counts of nested paths (bottom-up product DP).
std::vector<std::vector<double>> nested_counts(const CompiledNetwork& net) {
  const int m = net.level_count();
  std::vector<std::vector<double>> counts(m);
  for (int k = m - 1; k >= 0; --k) {
    const CompiledLevel& lvl = net.levels[k];
    counts[k].assign(lvl.ods.size(), 0.0);
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      // ways[h][v] = sum over walks origin -> v with exactly h edges of the
      // product of sub-path counts over the expansion edges crossed.
      std::vector<std::vector<double>> ways(lvl.hop_limit + 1,
                                            std::vector<double>(lvl.node_count, 0.0));
      ways[0][lvl.ods[od].origin] = 1.0;
      double total = 0.0;
      for (int h = 1; h <= lvl.hop_limit; ++h) {
        for (int v = 0; v < lvl.node_count; ++v) {
          if (ways[h - 1][v] == 0.0) continue;
          for (int e : lvl.out_edges[v]) {
            const CompiledEdge& ce = lvl.edges[e];
            const double mult = ce.kind == EdgeKind::Expansion
                                    ? counts[k + 1][ce.expands_to]
                                    : 1.0;
            ways[h][ce.head] += ways[h - 1][v] * mult;
          }
        }
        total += ways[h][lvl.ods[od].destination];
      }
      counts[k][od] = total;
    }
  }
  return counts;
}

} // namespace

std::vector<double> count_nested_paths(const CompiledNetwork& net) {
  auto counts = nested_counts(net);
  return counts[0];
}

namespace {

std::vector<NestedPath> enumerate_level(const CompiledNetwork& net, int level, int od,
                                        std::uint64_t cap, std::uint64_t& budget);

// Expand one walk into nested paths: Cartesian product over the sub-path
// choices of its expansion-edge occurrences (leftmost occurrence slowest).
void expand_walk(const CompiledNetwork& net, int level, int od,
                 const std::vector<int>& walk, std::uint64_t cap, std::uint64_t& budget,
                 std::vector<NestedPath>& out) {
  const CompiledLevel& lvl = net.levels[level];
  std::vector<int> occ; // positions of expansion edges along the walk
  for (int i = 0; i < static_cast<int>(walk.size()); ++i) {
    if (lvl.edges[walk[i]].kind == EdgeKind::Expansion) occ.push_back(i);
  }

  std::vector<std::vector<NestedPath>> choices;
  choices.reserve(occ.size());
  for (int pos : occ) {
    choices.push_back(
        enumerate_level(net, level + 1, lvl.edges[walk[pos]].expands_to, cap, budget));
  }

  std::vector<int> idx(occ.size(), 0);
  while (true) {
    if (budget == 0) throw PathExplosion("nested path count exceeds cap");
    --budget;
    NestedPath p;
    p.level = level;
    p.od = od;
    p.edges = walk;
    for (std::size_t i = 0; i < occ.size(); ++i) p.children.push_back(choices[i][idx[i]]);
    out.push_back(std::move(p));

    if (occ.empty()) break;
    int i = static_cast<int>(occ.size()) - 1;
    while (i >= 0) {
      if (++idx[i] < static_cast<int>(choices[i].size())) break;
      idx[i] = 0;
      --i;
    }
    if (i < 0) break;
  }
}

std::vector<NestedPath> enumerate_level(const CompiledNetwork& net, int level, int od,
                                        std::uint64_t cap, std::uint64_t& budget) {
  std::vector<NestedPath> out;
  for (const auto& walk : enumerate_walks(net.levels[level], od, cap)) {
    expand_walk(net, level, od, walk, cap, budget, out);
  }
  return out;
}

} // namespace

std::vector<NestedPath> enumerate_nested_paths(const CompiledNetwork& net, int od,
                                               std::uint64_t cap) {
  const double count = count_nested_paths(net)[od];
  if (!(count <= static_cast<double>(cap))) {
    throw PathExplosion("nested path count " + std::to_string(count) + " exceeds cap " +
                        std::to_string(cap));
  }
  std::uint64_t budget = cap;
  return enumerate_level(net, 0, od, cap, budget);
}

int nested_cost_edge_count(const CompiledNetwork& net, const NestedPath& p) {
  const CompiledLevel& lvl = net.levels[p.level];
  int n = 0;
  std::size_t child = 0;
  for (int e : p.edges) {
    if (lvl.edges[e].kind == EdgeKind::Cost) {
      ++n;
    } else {
      n += nested_cost_edge_count(net, p.children.at(child++));
    }
  }
  return n;
}

std::vector<double> longest_nested_cost_edges(const CompiledNetwork& net) {
  const int m = net.level_count();
  std::vector<std::vector<double>> longest(m);
  for (int k = m - 1; k >= 0; --k) {
    const CompiledLevel& lvl = net.levels[k];
    longest[k].assign(lvl.ods.size(), 0.0);
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      constexpr double kNone = -1.0;
      // best[h][v]: max cost-edge count over walks origin -> v with h edges,
      // expansion edges weighted by the next level's longest sub-path.
      std::vector<std::vector<double>> best(lvl.hop_limit + 1,
                                            std::vector<double>(lvl.node_count, kNone));
      best[0][lvl.ods[od].origin] = 0.0;
      double top = 0.0;
      for (int h = 1; h <= lvl.hop_limit; ++h) {
        for (int v = 0; v < lvl.node_count; ++v) {
          if (best[h - 1][v] == kNone) continue;
          for (int e : lvl.out_edges[v]) {
            const CompiledEdge& ce = lvl.edges[e];
            const double w =
                ce.kind == EdgeKind::Cost ? 1.0 : longest[k + 1][ce.expands_to];
            best[h][ce.head] = std::max(best[h][ce.head], best[h - 1][v] + w);
          }
        }
        top = std::max(top, best[h][lvl.ods[od].destination]);
      }
      longest[k][od] = top;
    }
  }
  return longest[0];
}

std::vector<std::vector<double>> count_walks(const CompiledNetwork& net) {
  const int m = net.level_count();
  std::vector<std::vector<double>> counts(m);
  for (int k = 0; k < m; ++k) {
    const CompiledLevel& lvl = net.levels[k];
    counts[k].assign(lvl.ods.size(), 0.0);
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      std::vector<std::vector<double>> ways(lvl.hop_limit + 1,
                                            std::vector<double>(lvl.node_count, 0.0));
      ways[0][lvl.ods[od].origin] = 1.0;
      double total = 0.0;
      for (int h = 1; h <= lvl.hop_limit; ++h) {
        for (int v = 0; v < lvl.node_count; ++v) {
          if (ways[h - 1][v] == 0.0) continue;
          for (int e : lvl.out_edges[v]) {
            ways[h][lvl.edges[e].head] += ways[h - 1][v];
          }
        }
        total += ways[h][lvl.ods[od].destination];
      }
      counts[k][od] = total;
    }
  }
  return counts;
}

} // namespace nesteq
