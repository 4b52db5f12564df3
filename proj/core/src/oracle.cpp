#include "nesteq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nesteq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Enumerated walks of every (level, OD), with an index by edge sequence so
// nested-path segments can be located in probability tables.
struct WalkSets {
  std::vector<std::vector<std::vector<std::vector<int>>>> walks; // [level][od][i]
  std::vector<std::vector<std::map<std::vector<int>, int>>> index;

  static WalkSets build(const CompiledNetwork& net, std::uint64_t cap) {
    WalkSets ws;
    const int m = net.level_count();
    ws.walks.resize(m);
    ws.index.resize(m);
    for (int k = 0; k < m; ++k) {
      const auto& lvl = net.levels[k];
      ws.walks[k].resize(lvl.ods.size());
      ws.index[k].resize(lvl.ods.size());
      for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
        ws.walks[k][od] = enumerate_walks(lvl, od, cap);
        for (int i = 0; i < static_cast<int>(ws.walks[k][od].size()); ++i) {
          ws.index[k][od].emplace(ws.walks[k][od][i], i);
        }
      }
    }
    return ws;
  }
};

// g-costs of the walks of one (level, OD), given the soft values of the
// levels below; then the soft value by direct log-sum-exp.
std::vector<double> walk_costs(const CompiledNetwork& net, const WalkSets& ws,
                               const std::vector<std::vector<double>>& value, int k,
                               int od, const TollVector& t) {
  const auto& lvl = net.levels[k];
  std::vector<double> g;
  g.reserve(ws.walks[k][od].size());
  for (const auto& walk : ws.walks[k][od]) {
    double c = 0.0;
    for (int e : walk) {
      const CompiledEdge& ce = lvl.edges[e];
      c += ce.kind == EdgeKind::Cost ? t[ce.cost_index] : value[k + 1][ce.expands_to];
    }
    g.push_back(c);
  }
  return g;
}

double soft_min(const std::vector<double>& g, double gamma) {
  if (g.empty()) return kInf;
  const double lo = *std::min_element(g.begin(), g.end());
  double s = 0.0;
  for (double c : g) s += std::exp(-(c - lo) / gamma);
  return lo - gamma * std::log(s);
}

std::vector<double> logit_split(const std::vector<double>& g, double gamma) {
  const double lo = *std::min_element(g.begin(), g.end());
  std::vector<double> p(g.size());
  double z = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    p[i] = std::exp(-(g[i] - lo) / gamma);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<std::vector<double>> soft_values_on(const CompiledNetwork& net,
                                                const WalkSets& ws,
                                                const TollVector& t) {
  const int m = net.level_count();
  std::vector<std::vector<double>> value(m);
  for (int k = m - 1; k >= 0; --k) {
    value[k].assign(net.levels[k].ods.size(), kInf);
    for (int od = 0; od < static_cast<int>(net.levels[k].ods.size()); ++od) {
      value[k][od] =
          soft_min(walk_costs(net, ws, value, k, od, t), net.levels[k].gamma);
    }
  }
  return value;
}

} // namespace

PathFlowVector uniform_path_flows(const CompiledNetwork& net, std::uint64_t path_cap) {
  PathFlowVector x;
  const int n = static_cast<int>(net.levels[0].ods.size());
  x.paths.resize(n);
  x.flow.resize(n);
  for (int od = 0; od < n; ++od) {
    x.paths[od] = enumerate_nested_paths(net, od, path_cap);
    const double d = net.level1_demand[od];
    x.flow[od].assign(x.paths[od].size(),
                      x.paths[od].empty() ? 0.0 : d / x.paths[od].size());
  }
  return x;
}

namespace {

void accumulate_edges(const CompiledNetwork& net, const NestedPath& p, double flow,
                      std::vector<double>& cost_flow, std::vector<double>& exp_flow) {
  const CompiledLevel& lvl = net.levels[p.level];
  std::size_t child = 0;
  for (int e : p.edges) {
    const CompiledEdge& ce = lvl.edges[e];
    if (ce.kind == EdgeKind::Cost) {
      cost_flow[ce.cost_index] += flow;
    } else {
      exp_flow[ce.expansion_index] += flow;
      accumulate_edges(net, p.children[child++], flow, cost_flow, exp_flow);
    }
  }
}

} // namespace

void explicit_edge_flows(const CompiledNetwork& net, const PathFlowVector& x,
                         std::vector<double>& cost_flow,
                         std::vector<double>& expansion_flow) {
  cost_flow.assign(net.cost_edge_count, 0.0);
  expansion_flow.assign(net.expansion_edge_count, 0.0);
  for (std::size_t od = 0; od < x.paths.size(); ++od) {
    for (std::size_t p = 0; p < x.paths[od].size(); ++p) {
      if (x.flow[od][p] != 0.0) {
        accumulate_edges(net, x.paths[od][p], x.flow[od][p], cost_flow, expansion_flow);
      }
    }
  }
}

namespace {

// Per-level marginal path flows (by walk index) accumulated from the nested
// assignment.
struct Marginals {
  std::vector<std::vector<std::vector<double>>> flow; // [level][od][walk]

  static Marginals build(const CompiledNetwork& net, const WalkSets& ws,
                         const PathFlowVector& x) {
    Marginals m;
    m.flow.resize(net.level_count());
    for (int k = 0; k < net.level_count(); ++k) {
      m.flow[k].resize(net.levels[k].ods.size());
      for (std::size_t od = 0; od < m.flow[k].size(); ++od) {
        m.flow[k][od].assign(ws.walks[k][od].size(), 0.0);
      }
    }
    for (std::size_t od = 0; od < x.paths.size(); ++od) {
      for (std::size_t p = 0; p < x.paths[od].size(); ++p) {
        if (x.flow[od][p] != 0.0) m.add(net, ws, x.paths[od][p], x.flow[od][p]);
      }
    }
    return m;
  }

  void add(const CompiledNetwork& net, const WalkSets& ws, const NestedPath& p,
           double f) {
    flow[p.level][p.od][ws.index[p.level][p.od].at(p.edges)] += f;
    for (const NestedPath& child : p.children) add(net, ws, child, f);
  }
};

} // namespace

double primal_objective(const CompiledNetwork& net, const PathFlowVector& x) {
  for (std::size_t od = 0; od < x.flow.size(); ++od) {
    double total = 0.0;
    for (double f : x.flow[od]) {
      if (f < 0.0) throw InfeasibleConservation("negative path flow");
      total += f;
    }
    const double d = net.level1_demand[od];
    if (std::abs(total - d) > 1e-9 * (1.0 + std::abs(d))) {
      throw InfeasibleConservation("path flows of OD " + std::to_string(od) +
                                   " sum to " + std::to_string(total) +
                                   ", demand is " + std::to_string(d));
    }
  }

  std::vector<double> cost_flow, exp_flow;
  explicit_edge_flows(net, x, cost_flow, exp_flow);

  double total = 0.0;
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    const double s = sigma(net.levels[k].edges[e].cost, cost_flow[i]);
    if (s == kInf) return kInf;
    total += s;
  }

  const WalkSets ws = WalkSets::build(net, 1u << 24);
  const Marginals marg = Marginals::build(net, ws, x);
  for (int k = 0; k < net.level_count(); ++k) {
    for (std::size_t od = 0; od < marg.flow[k].size(); ++od) {
      double d = 0.0;
      for (double f : marg.flow[k][od]) d += f;
      if (d <= 0.0) continue;
      double entropy = 0.0;
      for (double f : marg.flow[k][od]) {
        if (f > 0.0) entropy += f * std::log(f / d);
      }
      total += net.levels[k].gamma * entropy;
    }
  }
  return total;
}

std::vector<std::vector<double>> enum_soft_values(const CompiledNetwork& net,
                                                  const TollVector& t,
                                                  std::uint64_t path_cap) {
  return soft_values_on(net, WalkSets::build(net, path_cap), t);
}

EnumFlows enum_soft_flows(const CompiledNetwork& net, const TollVector& t,
                          std::uint64_t path_cap) {
  const WalkSets ws = WalkSets::build(net, path_cap);
  const auto value = soft_values_on(net, ws, t);

  EnumFlows out;
  out.cost_flow.assign(net.cost_edge_count, 0.0);
  out.expansion_flow.assign(net.expansion_edge_count, 0.0);
  out.od_demand.resize(net.level_count());
  for (int k = 0; k < net.level_count(); ++k) {
    out.od_demand[k].assign(net.levels[k].ods.size(), 0.0);
  }
  out.od_demand[0] = net.level1_demand;

  for (int k = 0; k < net.level_count(); ++k) {
    const auto& lvl = net.levels[k];
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const double d = out.od_demand[k][od];
      if (d == 0.0) continue;
      const auto g = walk_costs(net, ws, value, k, od, t);
      const auto p = logit_split(g, lvl.gamma);
      for (std::size_t i = 0; i < p.size(); ++i) {
        for (int e : ws.walks[k][od][i]) {
          const CompiledEdge& ce = lvl.edges[e];
          if (ce.kind == EdgeKind::Cost) {
            out.cost_flow[ce.cost_index] += d * p[i];
          } else {
            out.expansion_flow[ce.expansion_index] += d * p[i];
            out.od_demand[k + 1][ce.expands_to] += d * p[i];
          }
        }
      }
    }
  }
  return out;
}

namespace {

// Probability of one nested path under the per-level logit splits.
double nested_probability(
    const CompiledNetwork& net, const WalkSets& ws,
    const std::vector<std::vector<std::vector<double>>>& split, const NestedPath& p) {
  double prob = split[p.level][p.od][ws.index[p.level][p.od].at(p.edges)];
  for (const NestedPath& child : p.children) {
    prob *= nested_probability(net, ws, split, child);
  }
  return prob;
}

} // namespace

PathFlowVector brute_force_equilibrium(const CompiledNetwork& net,
                                       const OracleOptions& opt) {
  for (const auto& lvl : net.levels) {
    if (lvl.gamma < opt.gamma_min) {
      throw Error("oracle requires gamma >= " + std::to_string(opt.gamma_min));
    }
  }

  const WalkSets ws = WalkSets::build(net, opt.path_cap);
  PathFlowVector x = uniform_path_flows(net, opt.path_cap);

  std::vector<double> cost_flow, exp_flow;
  double eta = opt.eta0;
  double psi = primal_objective(net, x);

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    explicit_edge_flows(net, x, cost_flow, exp_flow);
    TollVector t(net.cost_edge_count);
    for (int i = 0; i < net.cost_edge_count; ++i) {
      const auto [k, e] = net.cost_edge_location(i);
      t[i] = tau(net.levels[k].edges[e].cost, cost_flow[i]);
    }

    const auto value = soft_values_on(net, ws, t);
    std::vector<std::vector<std::vector<double>>> split(net.level_count());
    for (int k = 0; k < net.level_count(); ++k) {
      split[k].resize(net.levels[k].ods.size());
      for (int od = 0; od < static_cast<int>(net.levels[k].ods.size()); ++od) {
        split[k][od] =
            logit_split(walk_costs(net, ws, value, k, od, t), net.levels[k].gamma);
      }
    }

    double residual = 0.0;
    PathFlowVector target = x;
    for (std::size_t od = 0; od < x.paths.size(); ++od) {
      const double d = net.level1_demand[od];
      for (std::size_t p = 0; p < x.paths[od].size(); ++p) {
        target.flow[od][p] = d * nested_probability(net, ws, split, x.paths[od][p]);
        residual = std::max(residual, std::abs(target.flow[od][p] - x.flow[od][p]));
      }
    }
    if (residual <= opt.tol) return x;

    // Damped update; halve eta until the primal objective does not increase.
    while (true) {
      PathFlowVector candidate = x;
      for (std::size_t od = 0; od < x.flow.size(); ++od) {
        for (std::size_t p = 0; p < x.flow[od].size(); ++p) {
          candidate.flow[od][p] =
              (1.0 - eta) * x.flow[od][p] + eta * target.flow[od][p];
        }
      }
      const double psi_next = primal_objective(net, candidate);
      if (psi_next <= psi + 1e-12 * (1.0 + std::abs(psi))) {
        x = std::move(candidate);
        psi = psi_next;
        eta = std::min(opt.eta0, eta * 1.1);
        break;
      }
      eta *= 0.5;
      if (eta < 1e-6) {
        throw OracleNonconvergence("damping underflow at residual " +
                                   std::to_string(residual));
      }
    }
  }
  throw OracleNonconvergence("iteration budget exhausted");
}

std::string describe_nested_path(const CompiledNetwork& net, const NestedPath& p) {
  const CompiledLevel& lvl = net.levels[p.level];
  std::string out;
  std::size_t child = 0;
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    if (i > 0) out += "+";
    const CompiledEdge& ce = lvl.edges[p.edges[i]];
    out += ce.id;
    if (ce.kind == EdgeKind::Expansion) {
      out += "(" + describe_nested_path(net, p.children[child++]) + ")";
    }
  }
  return out;
}

} // namespace nesteq
