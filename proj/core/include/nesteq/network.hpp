#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nesteq/cost.hpp"
#include "nesteq/errors.hpp"

namespace nesteq {

using NodeId = std::string;
using EdgeId = std::string;

enum class EdgeKind { Cost, Expansion };

/// A declared edge of one hierarchy level. Cost edges carry a CostParams
/// family; expansion edges open an OD pair of the next level (their flow
/// becomes that pair's demand) and carry no intrinsic cost.
struct Edge {
  EdgeId id;
  NodeId tail;
  NodeId head;
  EdgeKind kind = EdgeKind::Cost;
  CostParams cost;      // kind == Cost
  int expands_to = -1;  // kind == Expansion: OD index in the next level
};

struct OdPair {
  NodeId origin;
  NodeId destination;
};

/// One level of the hierarchy. Paths at this level are directed walks of at
/// most hop_limit edges; hop_limit <= 0 means "number of nodes minus one".
struct LevelGraph {
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;
  std::vector<OdPair> od_pairs;
  int hop_limit = 0;
};

/// The full m-level model: level k's expansion edges reference OD pairs of
/// level k+1, demands attach to level-1 OD pairs, gamma holds the per-level
/// choice temperatures.
struct HierNetwork {
  std::vector<LevelGraph> levels;
  std::vector<double> gamma;
  std::vector<double> demands; // per level-1 OD pair, same order as od_pairs

  int level_count() const { return static_cast<int>(levels.size()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Structural checks: declared endpoints, expansion references in range and
/// injective, positive temperatures, nonnegative demands, hop-bounded
/// reachability of every OD pair, admissible cost parameters.
ValidationReport validate(const HierNetwork& net);

// ---------------------------------------------------------------------------
// Compiled (dense) view. All numeric algorithms run on this form; it is
// immutable after construction and safe to share across threads.
// ---------------------------------------------------------------------------

struct CompiledEdge {
  EdgeId id;
  int tail = -1; // node index within the level
  int head = -1;
  EdgeKind kind = EdgeKind::Cost;
  CostParams cost;
  int expands_to = -1;   // OD index at level+1 (expansion edges)
  int cost_index = -1;   // global cost-edge index (cost edges)
  int expansion_index = -1; // global expansion-edge index (expansion edges)
};

struct CompiledOd {
  int origin = -1; // node index
  int destination = -1;
  EdgeId source_edge_id; // expansion edge feeding this OD ("" for level 1)
};

struct CompiledLevel {
  int node_count = 0;
  int hop_limit = 0;
  double gamma = 0.0;
  std::vector<NodeId> node_ids;
  std::vector<CompiledEdge> edges;           // sorted by edge id
  std::vector<std::vector<int>> out_edges;   // per node, edge indices (id-sorted)
  std::vector<CompiledOd> ods;
};

struct CompiledNetwork {
  std::vector<CompiledLevel> levels;
  std::vector<double> level1_demand; // per level-1 OD
  int cost_edge_count = 0;
  int expansion_edge_count = 0;

  int level_count() const { return static_cast<int>(levels.size()); }
  const CompiledEdge& edge(int level, int e) const { return levels[level].edges[e]; }
  /// (level, edge index) of a global cost-edge index.
  std::pair<int, int> cost_edge_location(int cost_index) const;
  /// Feeding expansion edge (level, edge index) of OD `od` at `level`;
  /// returns {-1,-1} for level-1 ODs and untargeted ODs.
  std::pair<int, int> od_source(int level, int od) const;

  std::vector<std::pair<int, int>> cost_locations;      // by cost_index
  std::vector<std::pair<int, int>> expansion_locations; // by expansion_index
  std::vector<std::vector<int>> od_source_edge;         // [level][od] -> level edge idx or -1
};

/// Validates and freezes the network into dense index form. Throws Error
/// with the validation report text if validation fails.
CompiledNetwork compile(const HierNetwork& net);

// ---------------------------------------------------------------------------
// Nested paths (explicit form; test oracle scale only)
// ---------------------------------------------------------------------------

/// Recursive descriptor of one complete route choice: a hop-bounded walk at
/// `level` plus one sub-path per traversal of an expansion edge. `children`
/// is parallel to the expansion-edge occurrences along the walk, in walk
/// order, so a walk crossing the same expansion edge twice carries two
/// independent sub-choices (the convention the smoothed DP realizes).
struct NestedPath {
  int level = 0;
  int od = 0;                     // OD index at `level`
  std::vector<int> edges;         // edge indices within the level
  std::vector<NestedPath> children;
};

/// Every nested path for level-1 OD pair `od`, depth-first, walks ordered
/// lexicographically by edge id sequence. Throws PathExplosion when the
/// total count would exceed `cap`.
std::vector<NestedPath> enumerate_nested_paths(const CompiledNetwork& net, int od,
                                               std::uint64_t cap = 1000000);

/// Count of nested paths per level-1 OD pair without materializing them
/// (dynamic program over hop counts; may overflow to +inf for huge sets).
std::vector<double> count_nested_paths(const CompiledNetwork& net);

/// Hop-bounded walks of one level for OD index `od` (edge index sequences,
/// lexicographic by edge id). The building block of the nested enumeration.
std::vector<std::vector<int>> enumerate_walks(const CompiledLevel& level, int od,
                                              std::uint64_t cap = 1000000);

/// Total cost-edge count of `p` including sub-paths (counts repeated
/// traversals).
int nested_cost_edge_count(const CompiledNetwork& net, const NestedPath& p);

/// Longest total cost-edge count over hop-bounded nested paths, per level-1
/// OD pair (longest-walk DP; no enumeration).
std::vector<double> longest_nested_cost_edges(const CompiledNetwork& net);

/// Hop-bounded walk counts per (level, OD), counting DP.
std::vector<std::vector<double>> count_walks(const CompiledNetwork& net);

} // namespace nesteq
