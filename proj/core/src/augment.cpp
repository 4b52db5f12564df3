#include "nesteq/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace nesteq {

namespace {

int effective_hop_limit(const LevelGraph& g) {
  if (g.hop_limit > 0) return g.hop_limit;
  return std::max(1, static_cast<int>(g.nodes.size()) - 1);
}

std::string unique_id(std::set<std::string>& used, std::string candidate) {
  std::string id = candidate;
  int n = 2;
  while (!used.insert(id).second) id = candidate + "~" + std::to_string(n++);
  return id;
}

} // namespace

FlattenResult flatten(const HierNetwork& net) {
  const int m = net.level_count();
  if (m < 1) throw Error("flatten: empty network");
  for (int k = 1; k < m; ++k) {
    if (std::abs(net.gamma[k] - net.gamma[0]) >
        1e-15 * std::max(1.0, std::abs(net.gamma[0]))) {
      throw UnequalTemperatures("flatten requires equal temperatures across levels");
    }
  }

  FlattenResult result;
  HierNetwork work = net;
  std::unordered_map<EdgeId, EdgeId> orig_of;
  for (const auto& lvl : work.levels) {
    for (const auto& e : lvl.edges) orig_of.emplace(e.id, e.id);
  }

  // Final hop limit: the walk set of the collapsed graph should admit every
  // nested path, whose flattened length is its total cost-edge count.
  double longest = 1.0;
  {
    const CompiledNetwork compiled = compile(net);
    for (double v : longest_nested_cost_edges(compiled)) longest = std::max(longest, v);
  }

  while (work.level_count() > 1) {
    const int host = work.level_count() - 2;
    LevelGraph& hg = work.levels[host];
    const LevelGraph& donor = work.levels[host + 1];

    std::set<std::string> used_nodes(hg.nodes.begin(), hg.nodes.end());
    std::set<std::string> used_edges;
    for (const auto& lvl : work.levels) {
      for (const auto& e : lvl.edges) used_edges.insert(e.id);
    }

    std::vector<Edge> merged;
    for (const Edge& e : hg.edges) {
      if (e.kind == EdgeKind::Cost) {
        merged.push_back(e);
        continue;
      }
      const OdPair& od = donor.od_pairs[e.expands_to];
      // Fresh copy of the donor graph; the opened OD's endpoints are
      // identified with the expansion edge's endpoints.
      std::unordered_map<NodeId, NodeId> node_map;
      node_map[od.origin] = e.tail;
      node_map[od.destination] = e.head;
      for (const NodeId& n : donor.nodes) {
        if (node_map.count(n)) continue;
        const NodeId copy = unique_id(used_nodes, e.id + "/" + n);
        node_map[n] = copy;
        hg.nodes.push_back(copy);
      }
      for (const Edge& de : donor.edges) {
        Edge copy = de;
        copy.id = unique_id(used_edges, e.id + "/" + de.id);
        copy.tail = node_map.at(de.tail);
        copy.head = node_map.at(de.head);
        orig_of[copy.id] = orig_of.at(de.id);
        merged.push_back(std::move(copy));
      }
    }
    hg.edges = std::move(merged);
    hg.hop_limit = std::max(1, static_cast<int>(std::lround(longest)));
    work.levels.pop_back();
    work.gamma.pop_back();
  }

  result.net = std::move(work);
  for (const Edge& e : result.net.levels[0].edges) {
    result.source_edge[e.id] = orig_of.at(e.id);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

namespace {

HierNetwork apply_common_source_sink(const HierNetwork& net, const CommonSourceSink& spec) {
  HierNetwork out = net;
  LevelGraph& g = out.levels[0];
  std::set<NodeId> nodes(g.nodes.begin(), g.nodes.end());
  std::set<EdgeId> edge_ids;
  for (const auto& lvl : out.levels) {
    for (const auto& e : lvl.edges) edge_ids.insert(e.id);
  }

  std::set<NodeId> rewired_origins, rewired_destinations;

  auto connect = [&](const NodeId& hub, const CommonSourceSink::Connection& c, bool from_hub) {
    if (!nodes.count(c.node)) {
      throw UnknownNode("augment: node '" + c.node + "' does not exist");
    }
    Edge e;
    e.id = unique_id(edge_ids, from_hub ? hub + "->" + c.node : c.node + "->" + hub);
    e.tail = from_hub ? hub : c.node;
    e.head = from_hub ? c.node : hub;
    e.kind = EdgeKind::Cost;
    e.cost = CostParams::constant(c.cost);
    g.edges.push_back(std::move(e));
  };

  int extra_hops = 0;
  if (spec.source) {
    if (nodes.count(*spec.source)) {
      throw Error("augment: source node '" + *spec.source + "' already exists");
    }
    g.nodes.push_back(*spec.source);
    for (const auto& c : spec.source_connections) {
      connect(*spec.source, c, true);
      rewired_origins.insert(c.node);
    }
    nodes.insert(*spec.source);
    ++extra_hops;
  }
  if (spec.sink) {
    if (nodes.count(*spec.sink)) {
      throw Error("augment: sink node '" + *spec.sink + "' already exists");
    }
    g.nodes.push_back(*spec.sink);
    for (const auto& c : spec.sink_connections) {
      connect(*spec.sink, c, false);
      rewired_destinations.insert(c.node);
    }
    ++extra_hops;
  }

  // Rewire OD pairs whose endpoints were connected; merge duplicates.
  std::vector<OdPair> new_ods;
  std::vector<double> new_demands;
  std::map<std::pair<NodeId, NodeId>, int> seen;
  for (int w = 0; w < static_cast<int>(g.od_pairs.size()); ++w) {
    OdPair od = g.od_pairs[w];
    if (spec.source && rewired_origins.count(od.origin)) od.origin = *spec.source;
    if (spec.sink && rewired_destinations.count(od.destination)) od.destination = *spec.sink;
    auto key = std::make_pair(od.origin, od.destination);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, static_cast<int>(new_ods.size()));
      new_ods.push_back(od);
      new_demands.push_back(out.demands[w]);
    } else {
      new_demands[it->second] += out.demands[w];
    }
  }
  g.od_pairs = std::move(new_ods);
  out.demands = std::move(new_demands);
  g.hop_limit = effective_hop_limit(net.levels[0]) + extra_hops;
  return out;
}

HierNetwork apply_opt_out(const HierNetwork& net, const OptOutEdges& spec) {
  HierNetwork out = net;
  LevelGraph& g = out.levels[0];
  std::set<EdgeId> edge_ids;
  for (const auto& lvl : out.levels) {
    for (const auto& e : lvl.edges) edge_ids.insert(e.id);
  }
  std::vector<int> which = spec.od_indices;
  if (which.empty()) {
    which.resize(g.od_pairs.size());
    for (int i = 0; i < static_cast<int>(which.size()); ++i) which[i] = i;
  }
  for (int w : which) {
    if (w < 0 || w >= static_cast<int>(g.od_pairs.size())) {
      throw Error("augment: opt-out OD index " + std::to_string(w) + " out of range");
    }
    Edge e;
    e.id = unique_id(edge_ids, "optout/" + std::to_string(w));
    e.tail = g.od_pairs[w].origin;
    e.head = g.od_pairs[w].destination;
    e.kind = EdgeKind::Cost;
    e.cost = CostParams::constant(spec.cost);
    g.edges.push_back(std::move(e));
  }
  return out;
}

HierNetwork apply_expand_node(const HierNetwork& net, const ExpandNode& spec) {
  if (spec.level < 0 || spec.level >= net.level_count()) {
    throw Error("augment: level index out of range");
  }
  HierNetwork out = net;
  LevelGraph& g = out.levels[spec.level];
  if (std::find(g.nodes.begin(), g.nodes.end(), spec.node) == g.nodes.end()) {
    throw UnknownNode("augment: node '" + spec.node + "' does not exist");
  }
  for (const OdPair& od : g.od_pairs) {
    if (od.origin == spec.node || od.destination == spec.node) {
      throw Error("augment: cannot expand node '" + spec.node +
                  "' because it is an OD endpoint");
    }
  }

  std::set<NodeId> node_ids(g.nodes.begin(), g.nodes.end());
  std::set<EdgeId> edge_ids;
  for (const auto& lvl : out.levels) {
    for (const auto& e : lvl.edges) edge_ids.insert(e.id);
  }

  std::vector<std::pair<EdgeId, NodeId>> in_ports, out_ports;
  for (Edge& e : g.edges) {
    // A self-loop at the node counts as both incoming and outgoing.
    if (e.head == spec.node) {
      const NodeId port = unique_id(node_ids, spec.node + "/in/" + e.id);
      g.nodes.push_back(port);
      in_ports.emplace_back(e.id, port);
      e.head = port;
    }
    if (e.tail == spec.node) {
      const NodeId port = unique_id(node_ids, spec.node + "/out/" + e.id);
      g.nodes.push_back(port);
      out_ports.emplace_back(e.id, port);
      e.tail = port;
    }
  }
  for (const auto& [in_id, in_port] : in_ports) {
    for (const auto& [out_id, out_port] : out_ports) {
      Edge via;
      via.id = unique_id(edge_ids, "via/" + spec.node + "/" + in_id + "/" + out_id);
      via.tail = in_port;
      via.head = out_port;
      via.kind = EdgeKind::Cost;
      via.cost = CostParams::constant(spec.traversal_cost);
      g.edges.push_back(std::move(via));
    }
  }
  g.nodes.erase(std::remove(g.nodes.begin(), g.nodes.end(), spec.node), g.nodes.end());

  // Walks now spend one extra edge per traversal of the expanded node.
  const int h = effective_hop_limit(net.levels[spec.level]);
  g.hop_limit = h + h / 2 + 1;
  return out;
}

} // namespace

HierNetwork augment(const HierNetwork& net, const AugmentSpec& spec) {
  return std::visit(
      [&net](const auto& s) -> HierNetwork {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CommonSourceSink>) {
          return apply_common_source_sink(net, s);
        } else if constexpr (std::is_same_v<T, OptOutEdges>) {
          return apply_opt_out(net, s);
        } else {
          return apply_expand_node(net, s);
        }
      },
      spec);
}

} // namespace nesteq
