#pragma once

#include "nesteq/network.hpp"

namespace nesteq {

/// Dual variable: one realized travel cost per cost edge, indexed by
/// CompiledEdge::cost_index.
using TollVector = std::vector<double>;

/// Free-flow costs t0, the solver's starting point.
TollVector free_flow_tolls(const CompiledNetwork& net);

/// Per-OD smoothed minimal costs and the effective expansion-edge weights
/// they induce. soft_value(level, od) is the temperature-smoothed shortest
/// hop-bounded path cost
///     -gamma_k * ln( sum_p exp(-g_p(t) / gamma_k) ),
/// where g_p sums tolls over the path's cost edges plus, for every expansion
/// edge crossed, the soft value of the OD pair it opens.
struct SoftValueTable {
  std::vector<std::vector<double>> od_value;  // [level][od]
  std::vector<double> expansion_weight;       // [global expansion index]
};

/// Backward log-partition table of one (level, destination):
/// logz[b][v] = ln sum over walks v -> destination with at most b edges of
/// exp(-cost(walk) / gamma). -inf where no such walk exists.
struct BackwardTable {
  int destination = -1;
  std::vector<std::vector<double>> logz;
};

struct LevelDp {
  std::vector<BackwardTable> tables; // one per distinct destination
  std::vector<int> od_table;         // od -> index into tables
};

/// The full smoothed Bellman-Ford state for one toll vector: effective edge
/// weights, backward tables per level, and the soft values they yield.
/// Levels are processed bottom-up so expansion weights are always available.
struct DpTables {
  std::vector<double> gamma;                    // temperatures actually used
  std::vector<std::vector<double>> edge_weight; // [level][edge]
  std::vector<LevelDp> levels;
  SoftValueTable values;
};

/// Builds the DP at the network's own temperatures, or at `gamma_override`
/// (one value per level) when given. Throws MissingToll on size mismatch.
DpTables build_dp(const CompiledNetwork& net, const TollVector& t,
                  const std::vector<double>* gamma_override = nullptr);

SoftValueTable soft_values(const CompiledNetwork& net, const TollVector& t);

/// Arc flows of the route-choice Markov process of one (level, OD):
/// phi[b][e] is the flow taking edge e with b hops of budget left,
/// stop[b] the flow terminating at the destination with b hops left,
/// visit[b][v] the flow present at state (v, b).
struct ArcFlowTable {
  std::vector<std::vector<double>> phi;
  std::vector<double> stop;
  std::vector<std::vector<double>> visit;

  void scale(double a);
  void add_scaled(const ArcFlowTable& other, double a);
};

/// Edge flows, induced demands and per-OD arc tables. This is both the
/// gradient of the dual smooth term (cost_flow) and the implicit primal
/// assignment (arcs): path flows are never materialized.
struct FlowState {
  std::vector<double> cost_flow;               // [global cost index]
  std::vector<double> expansion_flow;          // [global expansion index]
  std::vector<std::vector<double>> od_demand;  // [level][od]
  std::vector<std::vector<ArcFlowTable>> arcs; // [level][od]

  void scale(double a);
  void add_scaled(const FlowState& other, double a);
};

/// Zero-filled state with the network's shape (level-1 demands included).
FlowState zero_flow_state(const CompiledNetwork& net);

/// Unit-demand arc flows for one (level, OD) under the DP's choice process.
ArcFlowTable unit_arc_flows(const CompiledNetwork& net, const DpTables& dp, int level,
                            int od);

/// Top-down network loading: level-1 demands push through the branching
/// probabilities, expansion-edge flows become the next level's demands.
/// The result equals -grad of the dual smooth term with respect to t.
FlowState flows_from_dp(const CompiledNetwork& net, const DpTables& dp);

FlowState soft_flows(const CompiledNetwork& net, const TollVector& t,
                     SoftValueTable* values_out = nullptr);

/// Aggregate dual smooth term gamma^1 psi^1(t/gamma^1)
/// = -sum_w demand_w * soft_value(level 1, w).
double dual_smooth_term(const CompiledNetwork& net, const SoftValueTable& values);

/// Deterministic cost of a fully expanded nested path: the toll sum over all
/// cost edges at every level, counting repeated traversals.
double path_cost(const CompiledNetwork& net, const TollVector& t, const NestedPath& p);

/// g-cost of a bare level-k walk with soft children: tolls on cost edges
/// plus the table's effective weight for each expansion edge crossed.
double path_cost_soft(const CompiledNetwork& net, const TollVector& t,
                      const SoftValueTable& values, int level,
                      const std::vector<int>& walk);

/// Gradient Lipschitz bound of the dual smooth term:
/// (1/min_k gamma_k) * sum_w demand_w * (longest nested path cost-edge count)^2.
double lipschitz_bound(const CompiledNetwork& net);

/// Hard-min (temperature 0) counterpart of the soft values; the smoothing
/// diagnostic used by the Nash-limit checks.
std::vector<std::vector<double>> hard_min_costs(const CompiledNetwork& net,
                                                const TollVector& t);

/// Primal objective Psi evaluated on the implicit assignment: potentials of
/// the edge flows plus per-level temperature-weighted entropy terms computed
/// from the arc tables by the chain rule. Returns +inf when a capacitated
/// edge exceeds its capacity. Throws InfeasibleConservation when stop flows
/// do not add up to the recorded demands.
double primal_value(const CompiledNetwork& net, const FlowState& fs);

} // namespace nesteq
