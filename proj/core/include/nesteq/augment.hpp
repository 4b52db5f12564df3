#pragma once

#include <unordered_map>
#include <variant>

#include "nesteq/network.hpp"

namespace nesteq {

/// Result of collapsing an equal-temperature hierarchy into one level.
/// Spliced subgraphs are fresh copies per expansion edge, so `source_edge`
/// maps every flattened edge id back to the original edge it copies
/// (identity for level-1 edges). Flow comparisons aggregate through it.
struct FlattenResult {
  HierNetwork net;
  std::unordered_map<EdgeId, EdgeId> source_edge;
};

/// Collapses all levels into a single graph by splicing, per expansion edge,
/// a fresh copy of the next level's graph between the edge's endpoints
/// (tail identified with the opened OD's origin, head with its destination).
/// Requires equal gamma across levels (UnequalTemperatures otherwise). The
/// hop limit of the result is the cost-edge length of the longest nested
/// path, so on acyclic levels the flattened walk set is in bijection with
/// the nested path set.
FlattenResult flatten(const HierNetwork& net);

// ---------------------------------------------------------------------------
// Augmentation recipes (graph inflation tricks)
// ---------------------------------------------------------------------------

/// Common fictitious source and/or sink at level 1. Each connection adds a
/// constant-cost edge from the new source to an existing origin (resp. from
/// an existing destination to the new sink); OD pairs whose endpoint is
/// connected are rewired to the new node, merging demands of ODs that
/// become identical.
struct CommonSourceSink {
  struct Connection {
    NodeId node;
    double cost = 0.0;
  };
  std::optional<NodeId> source;
  std::vector<Connection> source_connections;
  std::optional<NodeId> sink;
  std::vector<Connection> sink_connections;
};

/// Adds one constant-cost opt-out edge per listed level-1 OD pair (all pairs
/// when `od_indices` is empty), modeling elastic demand.
struct OptOutEdges {
  std::vector<int> od_indices;
  double cost = 0.0;
};

/// Moves a node-traversal cost onto edges: each (incoming, outgoing) edge
/// pair of `node` gets a dedicated constant-cost connector, the incoming and
/// outgoing edges are re-anchored to per-edge split nodes. The target node
/// must not appear in any OD pair of its level.
struct ExpandNode {
  int level = 0; // 0-based
  NodeId node;
  double traversal_cost = 0.0;
};

using AugmentSpec = std::variant<CommonSourceSink, OptOutEdges, ExpandNode>;

/// Applies one recipe and returns the augmented network. Throws UnknownNode
/// when the recipe names a node that does not exist.
HierNetwork augment(const HierNetwork& net, const AugmentSpec& spec);

} // namespace nesteq
