#include "nesteq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nesteq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286;

double uniform_open(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = dist(rng);
  while (u <= 0.0) u = dist(rng);
  return u;
}

void check_lambdas(const CompiledNetwork& net, const DynamicsConfig& cfg) {
  if (static_cast<int>(cfg.lambdas.size()) != net.level_count()) {
    throw Error("dynamics needs one revision rate per level");
  }
  for (double l : cfg.lambdas) {
    if (!(l >= 0.0)) throw Error("revision rates must be nonnegative");
  }
}

std::vector<double> timescale_report(const DynamicsConfig& cfg) {
  std::vector<double> ratios;
  for (std::size_t k = 1; k < cfg.lambdas.size(); ++k) {
    ratios.push_back(cfg.lambdas[k - 1] > 0.0 ? cfg.lambdas[k] / cfg.lambdas[k - 1]
                                              : 0.0);
  }
  return ratios;
}

bool all_gamma_equal(const CompiledNetwork& net) {
  for (const auto& lvl : net.levels) {
    if (std::abs(lvl.gamma - net.levels[0].gamma) >
        1e-15 * std::max(1.0, net.levels[0].gamma)) {
      return false;
    }
  }
  return true;
}

TollVector realized_costs(const CompiledNetwork& net, const std::vector<double>& flow) {
  TollVector t(net.cost_edge_count);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    t[i] = tau(net.levels[k].edges[e].cost, flow[i]);
  }
  return t;
}

// Demand-scaled FlowState from per-(level, OD) unit arc states, loading
// demands top-down through expansion edges.
FlowState load_states(const CompiledNetwork& net,
                      const std::vector<std::vector<ArcFlowTable>>& unit_states) {
  FlowState fs = zero_flow_state(net);
  fs.od_demand[0] = net.level1_demand;
  for (int k = 0; k < net.level_count(); ++k) {
    const CompiledLevel& lvl = net.levels[k];
    for (int od = 0; od < static_cast<int>(lvl.ods.size()); ++od) {
      const double d = fs.od_demand[k][od];
      ArcFlowTable table = unit_states[k][od];
      table.scale(d);
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

// Uniform distribution over the hop-bounded nested path sets: zero costs at
// a common temperature make every branching weight a sub-path count.
DpTables uniform_dp(const CompiledNetwork& net) {
  const TollVector zero(net.cost_edge_count, 0.0);
  const std::vector<double> ones(net.level_count(), 1.0);
  return build_dp(net, zero, &ones);
}

} // namespace

Trajectory ode_integrate(const CompiledNetwork& net, const DynamicsConfig& cfg) {
  check_lambdas(net, cfg);
  double max_lambda = 0.0;
  for (double l : cfg.lambdas) max_lambda = std::max(max_lambda, l);
  if (!(cfg.ode_step > 0.0) || cfg.ode_step * max_lambda >= 1.0) {
    throw UnstableStep("explicit Euler requires h * max lambda < 1");
  }

  Trajectory out;
  out.equal_gamma = all_gamma_equal(net);
  out.timescale_ratios = timescale_report(cfg);

  // State: unit arc flows per (level, OD), initialized uniform over paths
  // (or at the configured starting tolls).
  std::vector<std::vector<ArcFlowTable>> state(net.level_count());
  {
    const DpTables dp0 = cfg.initial_tolls.empty()
                             ? uniform_dp(net)
                             : build_dp(net, cfg.initial_tolls);
    for (int k = 0; k < net.level_count(); ++k) {
      state[k].resize(net.levels[k].ods.size());
      for (int od = 0; od < static_cast<int>(state[k].size()); ++od) {
        state[k][od] = unit_arc_flows(net, dp0, k, od);
      }
    }
  }

  const int steps = std::max(1, static_cast<int>(std::llround(cfg.horizon / cfg.ode_step)));
  double drift = 0.0;

  auto record = [&](double time, const FlowState& fs) {
    TrajectorySample s;
    s.time = time;
    s.cost_flow = fs.cost_flow;
    s.expansion_flow = fs.expansion_flow;
    if (out.equal_gamma) s.psi = primal_value(net, fs);
    out.samples.push_back(std::move(s));
  };

  FlowState fs = load_states(net, state);
  record(0.0, fs);

  for (int step = 1; step <= steps; ++step) {
    const TollVector t = realized_costs(net, fs.cost_flow);
    const DpTables dp = build_dp(net, t);
    drift = 0.0;
    for (int k = 0; k < net.level_count(); ++k) {
      const double pull = cfg.ode_step * cfg.lambdas[k];
      for (int od = 0; od < static_cast<int>(state[k].size()); ++od) {
        ArcFlowTable target = unit_arc_flows(net, dp, k, od);
        for (std::size_t b = 0; b < target.phi.size(); ++b) {
          for (std::size_t e = 0; e < target.phi[b].size(); ++e) {
            drift = std::max(drift, cfg.lambdas[k] * std::abs(target.phi[b][e] -
                                                              state[k][od].phi[b][e]));
          }
        }
        state[k][od].scale(1.0 - pull);
        state[k][od].add_scaled(target, pull);
      }
    }
    fs = load_states(net, state);
    if (step % cfg.sample_every == 0 || step == steps) {
      record(step * cfg.ode_step, fs);
    }
  }

  out.final_state = std::move(fs);
  out.final_drift = drift;
  return out;
}

// ---------------------------------------------------------------------------
// Finite-population chain
// ---------------------------------------------------------------------------

namespace {

// Sample a complete nested descriptor from the DP's Gibbs distribution,
// recursing into every expansion-edge occurrence.
NestedPath sample_nested(const CompiledNetwork& net, const DpTables& dp, int level,
                         int od, std::mt19937_64& rng) {
  const CompiledLevel& lvl = net.levels[level];
  const double gamma = dp.gamma[level];
  const BackwardTable& bt = dp.levels[level].tables[dp.levels[level].od_table[od]];

  NestedPath p;
  p.level = level;
  p.od = od;

  int v = lvl.ods[od].origin;
  int b = lvl.hop_limit;
  while (true) {
    const double lz = bt.logz[b][v];
    double u = uniform_open(rng);
    if (v == bt.destination) {
      const double stop_prob = std::exp(-lz);
      if (u <= stop_prob || b == 0) break;
      u -= stop_prob;
    }
    int chosen = -1;
    for (int e : lvl.out_edges[v]) {
      const double next = bt.logz[b - 1][lvl.edges[e].head];
      if (next == kNegInf) continue;
      const double prob = std::exp(-dp.edge_weight[level][e] / gamma + next - lz);
      if (u <= prob) {
        chosen = e;
        break;
      }
      u -= prob;
    }
    if (chosen < 0) {
      // Rounding pushed u past the last alternative; take the best available.
      for (int e : lvl.out_edges[v]) {
        if (bt.logz[b - 1][lvl.edges[e].head] != kNegInf) chosen = e;
      }
      if (chosen < 0) break;
    }
    p.edges.push_back(chosen);
    if (lvl.edges[chosen].kind == EdgeKind::Expansion) {
      p.children.push_back(
          sample_nested(net, dp, level + 1, lvl.edges[chosen].expands_to, rng));
    }
    v = lvl.edges[chosen].head;
    --b;
  }
  return p;
}

void accumulate_counts(const CompiledNetwork& net, const NestedPath& p,
                       std::vector<double>& cost_count, std::vector<double>& exp_count) {
  const CompiledLevel& lvl = net.levels[p.level];
  std::size_t child = 0;
  for (int e : p.edges) {
    const CompiledEdge& ce = lvl.edges[e];
    if (ce.kind == EdgeKind::Cost) {
      cost_count[ce.cost_index] += 1.0;
    } else {
      exp_count[ce.expansion_index] += 1.0;
      accumulate_counts(net, p.children[child++], cost_count, exp_count);
    }
  }
}

// Subtrees of `root` sitting at hierarchy level `target` (0-based).
void collect_subtrees(NestedPath& root, int target, std::vector<NestedPath*>& out) {
  for (NestedPath& child : root.children) {
    if (child.level == target) {
      out.push_back(&child);
    } else {
      collect_subtrees(child, target, out);
    }
  }
}

} // namespace

Trajectory simulate_agents(const CompiledNetwork& net, const DynamicsConfig& cfg) {
  check_lambdas(net, cfg);
  const int m = net.level_count();
  const double n_rate = static_cast<double>(cfg.steps_per_unit_time);
  double lambda_sum = 0.0;
  for (double l : cfg.lambdas) lambda_sum += l;
  if (lambda_sum / n_rate > 1.0) {
    throw ProbabilityOverflow("sum of revision rates exceeds the step rate N");
  }

  std::mt19937_64 rng(cfg.seed);

  struct Agent {
    int od = 0;
    NestedPath path;
  };
  std::vector<Agent> agents;
  {
    const DpTables dp0 = uniform_dp(net);
    for (int od = 0; od < static_cast<int>(net.levels[0].ods.size()); ++od) {
      const long n = std::llround(cfg.agents_per_demand * net.level1_demand[od]);
      for (long i = 0; i < n; ++i) {
        agents.push_back({od, sample_nested(net, dp0, 0, od, rng)});
      }
    }
  }

  Trajectory out;
  out.equal_gamma = all_gamma_equal(net);
  out.timescale_ratios = timescale_report(cfg);

  const long steps = std::llround(cfg.horizon * n_rate);
  std::vector<double> cost_count(net.cost_edge_count, 0.0);
  std::vector<double> exp_count(net.expansion_edge_count, 0.0);

  auto tally = [&]() {
    std::fill(cost_count.begin(), cost_count.end(), 0.0);
    std::fill(exp_count.begin(), exp_count.end(), 0.0);
    for (const Agent& a : agents) accumulate_counts(net, a.path, cost_count, exp_count);
  };
  auto record = [&](double time) {
    TrajectorySample s;
    s.time = time;
    s.cost_flow = cost_count;
    s.expansion_flow = exp_count;
    for (double& v : s.cost_flow) v /= cfg.agents_per_demand;
    for (double& v : s.expansion_flow) v /= cfg.agents_per_demand;
    out.samples.push_back(std::move(s));
  };

  tally();
  record(0.0);

  std::vector<NestedPath*> slots;
  for (long step = 1; step <= steps; ++step) {
    // Costs are frozen at the step-start flows; all agents revise in parallel.
    std::vector<double> flow = cost_count;
    for (double& v : flow) v /= cfg.agents_per_demand;
    const TollVector t = realized_costs(net, flow);

    std::vector<DpTables> dps;
    dps.reserve(m);
    for (int k = 0; k < m; ++k) {
      // A level-k revision resamples the whole sub-descriptor at temperature
      // gamma_k, so every level below k is evaluated at gamma_k as well.
      std::vector<double> override_gamma(m, net.levels[k].gamma);
      for (int j = 0; j < k; ++j) override_gamma[j] = net.levels[j].gamma;
      dps.push_back(build_dp(net, t, &override_gamma));
    }

    for (Agent& a : agents) {
      double u = uniform_open(rng);
      const double p1 = cfg.lambdas[0] / n_rate;
      double menu = p1;
      if (u <= p1) {
        a.path = sample_nested(net, dps[0], 0, a.od, rng);
        continue;
      }
      u -= p1;
      bool moved = false;
      for (int k = 1; k < m && !moved; ++k) {
        slots.clear();
        collect_subtrees(a.path, k, slots);
        if (slots.empty()) continue;
        const double pk = cfg.lambdas[k] * slots.size() / n_rate;
        menu += pk;
        if (menu > 1.0) {
          throw ProbabilityOverflow(
              "per-agent revision mass exceeds one (too many nested segments "
              "for the chosen N)");
        }
        if (u <= pk) {
          const std::size_t j = std::min(
              slots.size() - 1, static_cast<std::size_t>(u / (cfg.lambdas[k] / n_rate)));
          *slots[j] = sample_nested(net, dps[k], k, slots[j]->od, rng);
          moved = true;
        } else {
          u -= pk;
        }
      }
    }

    tally();
    if (step % cfg.sample_every == 0 || step == steps) {
      record(static_cast<double>(step) / n_rate);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gumbel choice
// ---------------------------------------------------------------------------

int sample_gumbel_choice(const std::vector<double>& costs, double gamma,
                         std::mt19937_64& rng) {
  if (costs.empty()) throw Error("gumbel choice needs at least one option");
  int best = 0;
  double best_value = kNegInf;
  for (int i = 0; i < static_cast<int>(costs.size()); ++i) {
    const double xi = -gamma * (std::log(-std::log(uniform_open(rng))) + kEulerGamma);
    const double value = -costs[i] + xi;
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

GumbelCheck gumbel_expectation_check(const std::vector<double>& costs, double gamma,
                                     int samples, std::mt19937_64& rng) {
  if (costs.empty()) throw Error("gumbel check needs at least one option");
  GumbelCheck r;

  double lo = *std::min_element(costs.begin(), costs.end());
  double z = 0.0;
  for (double c : costs) z += std::exp(-(c - lo) / gamma);
  r.analytic = -lo + gamma * std::log(z);

  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    double mx = kNegInf;
    for (double c : costs) {
      const double xi = -gamma * (std::log(-std::log(uniform_open(rng))) + kEulerGamma);
      mx = std::max(mx, -c + xi);
    }
    sum += mx;
    sum_sq += mx * mx;
  }
  r.mc_mean = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - r.mc_mean * r.mc_mean);
  r.mc_stderr = std::sqrt(var / samples);
  return r;
}

} // namespace nesteq
