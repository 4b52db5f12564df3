#pragma once

#include "nesteq/softpath.hpp"

namespace nesteq {

/// Explicit assignment over enumerated nested paths, one table per level-1
/// OD pair. Test-oracle scale only: everything here enumerates paths.
struct PathFlowVector {
  std::vector<std::vector<NestedPath>> paths; // [level-1 od][path]
  std::vector<std::vector<double>> flow;      // [level-1 od][path]
};

struct OracleOptions {
  double tol = 1e-10;          // sup-norm fixed-point residual
  double eta0 = 0.5;           // initial damping of the logit reassignment
  int max_iters = 200000;
  double gamma_min = 1e-3;     // the oracle refuses temperatures below this
  std::uint64_t path_cap = 10000;
};

/// Demand spread uniformly over the enumerated nested paths.
PathFlowVector uniform_path_flows(const CompiledNetwork& net,
                                  std::uint64_t path_cap = 10000);

/// Edge flows implied by x, counting repeated traversals. Cost flows are
/// indexed by global cost index, expansion flows by global expansion index.
void explicit_edge_flows(const CompiledNetwork& net, const PathFlowVector& x,
                         std::vector<double>& cost_flow,
                         std::vector<double>& expansion_flow);

/// Exact primal objective: edge potentials plus per-level entropy terms
/// computed from explicit per-level path marginals with induced demands.
/// Throws InfeasibleConservation when level-1 path flows do not add up to
/// the demands; +inf when a capacitated edge is exceeded.
double primal_objective(const CompiledNetwork& net, const PathFlowVector& x);

/// Per-(level, OD) soft values by direct summation over enumerated walks,
/// bottom-up. Fully independent of the smoothed Bellman-Ford tables.
std::vector<std::vector<double>> enum_soft_values(const CompiledNetwork& net,
                                                  const TollVector& t,
                                                  std::uint64_t path_cap = 10000);

/// Logit network loading by enumeration: per-level logit splits at the given
/// tolls, demands propagated top-down through expansion edges.
struct EnumFlows {
  std::vector<double> cost_flow;
  std::vector<double> expansion_flow;
  std::vector<std::vector<double>> od_demand; // [level][od]
};
EnumFlows enum_soft_flows(const CompiledNetwork& net, const TollVector& t,
                          std::uint64_t path_cap = 10000);

/// Damped fixed-point iteration of the logit reassignment: from x compute
/// edge flows, realized costs t = tau(f), the per-level logit targets, and
/// mix with factor eta (halved whenever the primal objective fails to
/// decrease). Stops when the undamped residual falls below tol. Throws
/// OracleNonconvergence when the budget or the damping floor is exhausted.
PathFlowVector brute_force_equilibrium(const CompiledNetwork& net,
                                       const OracleOptions& opt = {});

/// Human-readable rendering, sub-paths in parentheses: "a+x(c+d)+b".
std::string describe_nested_path(const CompiledNetwork& net, const NestedPath& p);

} // namespace nesteq
