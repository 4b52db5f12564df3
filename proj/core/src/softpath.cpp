#include "nesteq/softpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nesteq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ln(sum exp(terms)) with max subtraction; -inf terms drop out.
double log_sum_exp(const std::vector<double>& terms) {
  double mx = kNegInf;
  for (double v : terms) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : terms) {
    if (v != kNegInf) s += std::exp(v - mx);
  }
  return mx + std::log(s);
}

} // namespace

TollVector free_flow_tolls(const CompiledNetwork& net) {
  TollVector t(net.cost_edge_count, 0.0);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    t[i] = net.levels[k].edges[e].cost.t0;
  }
  return t;
}

DpTables build_dp(const CompiledNetwork& net, const TollVector& t,
                  const std::vector<double>* gamma_override) {
  if (static_cast<int>(t.size()) != net.cost_edge_count) {
    throw MissingToll("toll vector has " + std::to_string(t.size()) + " entries, need " +
                      std::to_string(net.cost_edge_count));
  }
  const int m = net.level_count();
  DpTables dp;
  dp.gamma.resize(m);
  for (int k = 0; k < m; ++k) {
    dp.gamma[k] = gamma_override ? gamma_override->at(k) : net.levels[k].gamma;
  }
  dp.edge_weight.resize(m);
  dp.levels.resize(m);
  dp.values.od_value.resize(m);
  dp.values.expansion_weight.assign(net.expansion_edge_count, 0.0);

  for (int k = m - 1; k >= 0; --k) {
    const CompiledLevel& lvl = net.levels[k];
    const double gamma = dp.gamma[k];
    const int H = lvl.hop_limit;

    auto& weights = dp.edge_weight[k];
    weights.assign(lvl.edges.size(), 0.0);
    for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
      const CompiledEdge& ce = lvl.edges[e];
      weights[e] = ce.kind == EdgeKind::Cost
                       ? t[ce.cost_index]
                       : dp.values.od_value[k + 1][ce.expands_to];
    }

    // One backward table per distinct destination.
    LevelDp& ldp = dp.levels[k];
    ldp.od_table.assign(lvl.ods.size(), -1);
    std::map<int, int> dest_index;
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const int dest = lvl.ods[od].destination;
      auto it = dest_index.find(dest);
      if (it != dest_index.end()) {
        ldp.od_table[od] = it->second;
        continue;
      }

      BackwardTable table;
      table.destination = dest;
      table.logz.assign(H + 1, std::vector<double>(lvl.node_count, kNegInf));
      table.logz[0][dest] = 0.0;
      std::vector<double> terms;
      for (int b = 1; b <= H; ++b) {
        for (int v = 0; v < lvl.node_count; ++v) {
          terms.clear();
          if (v == dest) terms.push_back(0.0);
          for (int e : lvl.out_edges[v]) {
            const double prev = table.logz[b - 1][lvl.edges[e].head];
            if (prev == kNegInf) continue;
            terms.push_back(-weights[e] / gamma + prev);
          }
          table.logz[b][v] = log_sum_exp(terms);
        }
      }
      const int idx = static_cast<int>(ldp.tables.size());
      ldp.tables.push_back(std::move(table));
      dest_index.emplace(dest, idx);
      ldp.od_table[od] = idx;
    }

    auto& vals = dp.values.od_value[k];
    vals.assign(lvl.ods.size(), kInf);
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const BackwardTable& table = ldp.tables[ldp.od_table[od]];
      const double lz = table.logz[H][lvl.ods[od].origin];
      vals[od] = lz == kNegInf ? kInf : -gamma * lz;
    }
    for (const CompiledEdge& ce : lvl.edges) {
      if (ce.kind == EdgeKind::Expansion) {
        dp.values.expansion_weight[ce.expansion_index] =
            dp.values.od_value[k + 1][ce.expands_to];
      }
    }
  }
  return dp;
}

SoftValueTable soft_values(const CompiledNetwork& net, const TollVector& t) {
  return build_dp(net, t).values;
}

void ArcFlowTable::scale(double a) {
  for (auto& row : phi) {
    for (double& v : row) v *= a;
  }
  for (double& v : stop) v *= a;
  for (auto& row : visit) {
    for (double& v : row) v *= a;
  }
}

void ArcFlowTable::add_scaled(const ArcFlowTable& other, double a) {
  for (std::size_t b = 0; b < phi.size(); ++b) {
    for (std::size_t e = 0; e < phi[b].size(); ++e) phi[b][e] += a * other.phi[b][e];
  }
  for (std::size_t b = 0; b < stop.size(); ++b) stop[b] += a * other.stop[b];
  for (std::size_t b = 0; b < visit.size(); ++b) {
    for (std::size_t v = 0; v < visit[b].size(); ++v) visit[b][v] += a * other.visit[b][v];
  }
}

void FlowState::scale(double a) {
  for (double& v : cost_flow) v *= a;
  for (double& v : expansion_flow) v *= a;
  for (auto& lvl : od_demand) {
    for (double& v : lvl) v *= a;
  }
  for (auto& lvl : arcs) {
    for (auto& table : lvl) table.scale(a);
  }
}

void FlowState::add_scaled(const FlowState& other, double a) {
  for (std::size_t i = 0; i < cost_flow.size(); ++i) cost_flow[i] += a * other.cost_flow[i];
  for (std::size_t i = 0; i < expansion_flow.size(); ++i) {
    expansion_flow[i] += a * other.expansion_flow[i];
  }
  for (std::size_t k = 0; k < od_demand.size(); ++k) {
    for (std::size_t w = 0; w < od_demand[k].size(); ++w) {
      od_demand[k][w] += a * other.od_demand[k][w];
    }
  }
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    for (std::size_t w = 0; w < arcs[k].size(); ++w) {
      arcs[k][w].add_scaled(other.arcs[k][w], a);
    }
  }
}

namespace {

ArcFlowTable empty_table(const CompiledLevel& lvl) {
  ArcFlowTable table;
  table.phi.assign(lvl.hop_limit + 1, std::vector<double>(lvl.edges.size(), 0.0));
  table.stop.assign(lvl.hop_limit + 1, 0.0);
  table.visit.assign(lvl.hop_limit + 1, std::vector<double>(lvl.node_count, 0.0));
  return table;
}

// Forward pass: push `demand` through the branching probabilities implied by
// the backward table. Budgets count down from H to 0.
ArcFlowTable forward_pass(const CompiledNetwork& net, const DpTables& dp, int level,
                          int od, double demand) {
  const CompiledLevel& lvl = net.levels[level];
  const double gamma = dp.gamma[level];
  const BackwardTable& bt = dp.levels[level].tables[dp.levels[level].od_table[od]];
  const int H = lvl.hop_limit;

  ArcFlowTable table = empty_table(lvl);
  if (demand == 0.0) return table;
  table.visit[H][lvl.ods[od].origin] = demand;
  for (int b = H; b >= 1; --b) {
    for (int v = 0; v < lvl.node_count; ++v) {
      const double mass = table.visit[b][v];
      if (mass == 0.0) continue;
      const double lz = bt.logz[b][v];
      if (v == bt.destination) {
        table.stop[b] = mass * std::exp(-lz);
      }
      for (int e : lvl.out_edges[v]) {
        const double next = bt.logz[b - 1][lvl.edges[e].head];
        if (next == kNegInf) continue;
        const double flow = mass * std::exp(-dp.edge_weight[level][e] / gamma + next - lz);
        table.phi[b][e] = flow;
        table.visit[b - 1][lvl.edges[e].head] += flow;
      }
    }
  }
  table.stop[0] = table.visit[0][bt.destination];
  return table;
}

} // namespace

FlowState zero_flow_state(const CompiledNetwork& net) {
  FlowState fs;
  fs.cost_flow.assign(net.cost_edge_count, 0.0);
  fs.expansion_flow.assign(net.expansion_edge_count, 0.0);
  fs.od_demand.resize(net.level_count());
  fs.arcs.resize(net.level_count());
  for (int k = 0; k < net.level_count(); ++k) {
    fs.od_demand[k].assign(net.levels[k].ods.size(), 0.0);
    fs.arcs[k].resize(net.levels[k].ods.size());
    for (auto& table : fs.arcs[k]) table = empty_table(net.levels[k]);
  }
  return fs;
}

ArcFlowTable unit_arc_flows(const CompiledNetwork& net, const DpTables& dp, int level,
                            int od) {
  return forward_pass(net, dp, level, od, 1.0);
}

FlowState flows_from_dp(const CompiledNetwork& net, const DpTables& dp) {
  const int m = net.level_count();
  FlowState fs;
  fs.cost_flow.assign(net.cost_edge_count, 0.0);
  fs.expansion_flow.assign(net.expansion_edge_count, 0.0);
  fs.od_demand.resize(m);
  fs.arcs.resize(m);
  for (int k = 0; k < m; ++k) {
    fs.od_demand[k].assign(net.levels[k].ods.size(), 0.0);
    fs.arcs[k].resize(net.levels[k].ods.size());
  }
  fs.od_demand[0] = net.level1_demand;

  for (int k = 0; k < m; ++k) {
    const CompiledLevel& lvl = net.levels[k];
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      ArcFlowTable table = forward_pass(net, dp, k, od, fs.od_demand[k][od]);
      for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
        double f = 0.0;
        for (int b = 1; b <= lvl.hop_limit; ++b) f += table.phi[b][e];
        const CompiledEdge& ce = lvl.edges[e];
        if (ce.kind == EdgeKind::Cost) {
          fs.cost_flow[ce.cost_index] += f;
        } else {
          fs.expansion_flow[ce.expansion_index] += f;
          fs.od_demand[k + 1][ce.expands_to] += f;
        }
      }
      fs.arcs[k][od] = std::move(table);
    }
  }
  return fs;
}

FlowState soft_flows(const CompiledNetwork& net, const TollVector& t,
                     SoftValueTable* values_out) {
  DpTables dp = build_dp(net, t);
  if (values_out) *values_out = dp.values;
  return flows_from_dp(net, dp);
}

double dual_smooth_term(const CompiledNetwork& net, const SoftValueTable& values) {
  double s = 0.0;
  for (std::size_t w = 0; w < net.level1_demand.size(); ++w) {
    if (net.level1_demand[w] == 0.0) continue;
    s -= net.level1_demand[w] * values.od_value[0][w];
  }
  return s;
}

double path_cost(const CompiledNetwork& net, const TollVector& t, const NestedPath& p) {
  if (static_cast<int>(t.size()) != net.cost_edge_count) {
    throw MissingToll("toll vector size mismatch");
  }
  const CompiledLevel& lvl = net.levels[p.level];
  double cost = 0.0;
  std::size_t child = 0;
  for (int e : p.edges) {
    const CompiledEdge& ce = lvl.edges[e];
    if (ce.kind == EdgeKind::Cost) {
      cost += t[ce.cost_index];
    } else {
      if (child >= p.children.size()) {
        throw Error("nested path is missing a sub-path for an expansion edge");
      }
      cost += path_cost(net, t, p.children[child++]);
    }
  }
  return cost;
}

double path_cost_soft(const CompiledNetwork& net, const TollVector& t,
                      const SoftValueTable& values, int level,
                      const std::vector<int>& walk) {
  if (static_cast<int>(t.size()) != net.cost_edge_count) {
    throw MissingToll("toll vector size mismatch");
  }
  const CompiledLevel& lvl = net.levels[level];
  double cost = 0.0;
  for (int e : walk) {
    const CompiledEdge& ce = lvl.edges[e];
    cost += ce.kind == EdgeKind::Cost ? t[ce.cost_index]
                                      : values.expansion_weight[ce.expansion_index];
  }
  return cost;
}

double lipschitz_bound(const CompiledNetwork& net) {
  double gamma_min = kInf;
  for (const auto& lvl : net.levels) gamma_min = std::min(gamma_min, lvl.gamma);
  const std::vector<double> longest = longest_nested_cost_edges(net);
  double s = 0.0;
  for (std::size_t w = 0; w < net.level1_demand.size(); ++w) {
    s += net.level1_demand[w] * longest[w] * longest[w];
  }
  return s / gamma_min;
}

std::vector<std::vector<double>> hard_min_costs(const CompiledNetwork& net,
                                                const TollVector& t) {
  if (static_cast<int>(t.size()) != net.cost_edge_count) {
    throw MissingToll("toll vector size mismatch");
  }
  const int m = net.level_count();
  std::vector<std::vector<double>> value(m);
  for (int k = m - 1; k >= 0; --k) {
    const CompiledLevel& lvl = net.levels[k];
    value[k].assign(lvl.ods.size(), kInf);
    std::vector<double> weight(lvl.edges.size(), 0.0);
    for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
      const CompiledEdge& ce = lvl.edges[e];
      weight[e] = ce.kind == EdgeKind::Cost ? t[ce.cost_index]
                                            : value[k + 1][ce.expands_to];
    }
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const CompiledOd& w = lvl.ods[od];
      // dist[b][v]: min cost over walks v -> destination with at most b edges.
      std::vector<std::vector<double>> dist(lvl.hop_limit + 1,
                                            std::vector<double>(lvl.node_count, kInf));
      dist[0][w.destination] = 0.0;
      for (int b = 1; b <= lvl.hop_limit; ++b) {
        for (int v = 0; v < lvl.node_count; ++v) {
          double best = v == w.destination ? 0.0 : kInf;
          for (int e : lvl.out_edges[v]) {
            best = std::min(best, weight[e] + dist[b - 1][lvl.edges[e].head]);
          }
          dist[b][v] = best;
        }
      }
      value[k][od] = dist[lvl.hop_limit][w.origin];
    }
  }
  return value;
}

double primal_value(const CompiledNetwork& net, const FlowState& fs) {
  double total = 0.0;
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    const double s = sigma(net.levels[k].edges[e].cost, fs.cost_flow[i]);
    if (s == kInf) return kInf;
    total += s;
  }

  for (int k = 0; k < net.level_count(); ++k) {
    const CompiledLevel& lvl = net.levels[k];
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const double demand = fs.od_demand[k][od];
      const ArcFlowTable& table = fs.arcs[k][od];
      if (table.stop.empty()) {
        if (demand > 0.0) {
          throw InfeasibleConservation("missing arc table for a demanded OD pair");
        }
        continue;
      }
      double served = 0.0;
      for (double s : table.stop) served += s;
      if (std::abs(served - demand) > 1e-9 * (1.0 + std::abs(demand))) {
        throw InfeasibleConservation(
            "stop flows (" + std::to_string(served) + ") do not match demand (" +
            std::to_string(demand) + ") at level " + std::to_string(k + 1));
      }
      if (demand == 0.0) continue;

      // Chain rule: sum_p x_p ln(x_p / d) over the Markov assignment equals
      // the sum of phi * ln(phi / visit) over arcs plus the stop terms.
      double entropy = 0.0;
      const int dest = lvl.ods[od].destination;
      for (int b = static_cast<int>(table.phi.size()) - 1; b >= 1; --b) {
        for (int e = 0; e < static_cast<int>(lvl.edges.size()); ++e) {
          const double f = table.phi[b][e];
          if (f <= 0.0) continue;
          entropy += f * std::log(f / table.visit[b][lvl.edges[e].tail]);
        }
      }
      for (int b = 0; b < static_cast<int>(table.stop.size()); ++b) {
        const double f = table.stop[b];
        if (f <= 0.0) continue;
        entropy += f * std::log(f / table.visit[b][dest]);
      }
      total += lvl.gamma * entropy;
    }
  }
  return total;
}

} // namespace nesteq
