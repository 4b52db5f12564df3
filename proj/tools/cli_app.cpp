#include "cli_app.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nesteq/augment.hpp"
#include "nesteq/dualsolve.hpp"
#include "nesteq/dynamics.hpp"
#include "nesteq/network_io.hpp"
#include "nesteq/oracle.hpp"

namespace nesteq::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

fs::path default_out_dir() {
  const char* env = std::getenv("NESTEQ_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
  return out;
}

void write_flows(const fs::path& dir, const CompiledNetwork& net,
                 const std::vector<double>& flow, const std::vector<double>& toll,
                 const std::string& name) {
  auto out = open_out(dir, name);
  out << "edge,level,flow,toll\n";
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    out << net.levels[k].edges[e].id << "," << k + 1 << "," << fmt(flow[i]) << ","
        << fmt(toll.empty() ? 0.0 : toll[i]) << "\n";
  }
}

void write_demands(const fs::path& dir, const CompiledNetwork& net,
                   const std::vector<std::vector<double>>& demand) {
  auto out = open_out(dir, "demands.csv");
  out << "level,od,origin,destination,demand\n";
  for (int k = 0; k < net.level_count(); ++k) {
    for (std::size_t w = 0; w < net.levels[k].ods.size(); ++w) {
      const CompiledOd& od = net.levels[k].ods[w];
      out << k + 1 << "," << w << "," << net.levels[k].node_ids[od.origin] << ","
          << net.levels[k].node_ids[od.destination] << "," << fmt(demand[k][w]) << "\n";
    }
  }
}

TollVector tolls_from_csv(const CompiledNetwork& net, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open toll file '" + path + "'");
  std::unordered_map<std::string, double> by_id;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("toll file rows must be 'edge,toll'");
    const std::string id = line.substr(0, comma);
    if (first && id == "edge") {
      first = false;
      continue;
    }
    first = false;
    by_id[id] = std::stod(line.substr(comma + 1));
  }
  TollVector t = free_flow_tolls(net);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    auto it = by_id.find(net.levels[k].edges[e].id);
    if (it != by_id.end()) t[i] = it->second;
  }
  return t;
}

// ---------------------------------------------------------------------------

int run_validate(const std::string& input) {
  const HierNetwork net = load_network(input);
  const ValidationReport rep = validate(net);
  if (rep.ok()) {
    std::cout << "ok\n";
    return 0;
  }
  std::cerr << rep.to_string();
  return 1;
}

struct SolveArgs {
  std::string input;
  fs::path out_dir = default_out_dir();
  SolverConfig cfg;
};

int run_solve(const SolveArgs& args) {
  const CompiledNetwork net = compile(load_network(args.input));
  const EquilibriumSolution sol = solve(net, args.cfg);
  for (const auto& w : sol.warnings) std::cerr << "warning: " << w << "\n";

  {
    auto out = open_out(args.out_dir, "convergence.csv");
    out << "iteration,dual_value,primal_value,gap,best_gap,elapsed_seconds\n";
    for (const Checkpoint& c : sol.trace) {
      out << c.iteration << "," << fmt(c.dual_value) << "," << fmt(c.primal_value) << ","
          << fmt(c.gap) << "," << fmt(c.best_gap) << "," << fmt(c.elapsed_seconds)
          << "\n";
    }
  }
  write_flows(args.out_dir, net, sol.flows.cost_flow, tolls(net, sol), "flows.csv");
  write_demands(args.out_dir, net, sol.flows.od_demand);
  {
    auto out = open_out(args.out_dir, "certificate.csv");
    out << "dual_value,primal_value,gap,iterations,converged\n";
    out << fmt(sol.certificate.dual_value) << "," << fmt(sol.certificate.primal_value)
        << "," << fmt(sol.certificate.gap) << "," << sol.certificate.iterations << ","
        << (sol.certificate.converged ? 1 : 0) << "\n";
  }
  std::cout << "gap " << fmt(sol.certificate.gap) << " after "
            << sol.certificate.iterations << " iterations\n";
  return sol.certificate.converged ? 0 : 2;
}

struct SimulateArgs {
  std::string input;
  fs::path out_dir = default_out_dir();
  DynamicsConfig cfg;
  std::string mode = "ode";
};

int run_simulate(const SimulateArgs& args) {
  const CompiledNetwork net = compile(load_network(args.input));
  DynamicsConfig cfg = args.cfg;
  if (cfg.lambdas.empty()) cfg.lambdas.assign(net.level_count(), 1.0);

  const Trajectory traj =
      args.mode == "agents" ? simulate_agents(net, cfg) : ode_integrate(net, cfg);
  for (std::size_t k = 0; k + 1 < cfg.lambdas.size(); ++k) {
    std::cerr << "timescale ratio lambda[" << k + 2 << "]/lambda[" << k + 1
              << "] = " << traj.timescale_ratios[k] << "\n";
  }

  auto out = open_out(args.out_dir, "trajectory.csv");
  out << "time";
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    out << "," << net.levels[k].edges[e].id;
  }
  const bool with_psi = traj.equal_gamma && args.mode != "agents";
  if (with_psi) out << ",psi";
  out << "\n";
  for (const TrajectorySample& s : traj.samples) {
    out << fmt(s.time);
    for (double f : s.cost_flow) out << "," << fmt(f);
    if (with_psi) out << "," << fmt(s.psi);
    out << "\n";
  }
  return 0;
}

struct OracleArgs {
  std::string input;
  fs::path out_dir = default_out_dir();
  OracleOptions opt;
};

int run_oracle(const OracleArgs& args) {
  const CompiledNetwork net = compile(load_network(args.input));
  const PathFlowVector x = brute_force_equilibrium(net, args.opt);

  std::vector<double> cost_flow, exp_flow;
  explicit_edge_flows(net, x, cost_flow, exp_flow);
  TollVector t(net.cost_edge_count);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    t[i] = tau(net.levels[k].edges[e].cost, cost_flow[i]);
  }

  {
    auto out = open_out(args.out_dir, "paths.csv");
    out << "od,path,description,flow,cost\n";
    for (std::size_t od = 0; od < x.paths.size(); ++od) {
      for (std::size_t p = 0; p < x.paths[od].size(); ++p) {
        out << od << "," << p << "," << describe_nested_path(net, x.paths[od][p]) << ","
            << fmt(x.flow[od][p]) << "," << fmt(path_cost(net, t, x.paths[od][p]))
            << "\n";
      }
    }
  }
  write_flows(args.out_dir, net, cost_flow, {}, "oracle_flows.csv");
  return 0;
}

int run_flatten(const std::string& input, const fs::path& out_dir) {
  const HierNetwork net = load_network(input);
  const FlattenResult flat = flatten(net);
  {
    fs::create_directories(out_dir);
    save_network(flat.net, (out_dir / "flattened.json").string());
  }
  auto out = open_out(out_dir, "provenance.csv");
  out << "edge,source_edge\n";
  std::vector<std::pair<EdgeId, EdgeId>> rows(flat.source_edge.begin(),
                                              flat.source_edge.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, src] : rows) out << id << "," << src << "\n";
  return 0;
}

int run_softpath_eval(const std::string& input, const std::string& toll_file) {
  const CompiledNetwork net = compile(load_network(input));
  const TollVector t =
      toll_file.empty() ? free_flow_tolls(net) : tolls_from_csv(net, toll_file);
  SoftValueTable values;
  const FlowState flows = soft_flows(net, t, &values);

  std::cout << "level,od,origin,destination,soft_value\n";
  for (int k = 0; k < net.level_count(); ++k) {
    for (std::size_t w = 0; w < net.levels[k].ods.size(); ++w) {
      const CompiledOd& od = net.levels[k].ods[w];
      std::cout << k + 1 << "," << w << "," << net.levels[k].node_ids[od.origin] << ","
                << net.levels[k].node_ids[od.destination] << ","
                << fmt(values.od_value[k][w]) << "\n";
    }
  }
  std::cout << "\nedge,level,flow\n";
  for (int i = 0; i < net.cost_edge_count; ++i) {
    const auto [k, e] = net.cost_edge_location(i);
    std::cout << net.levels[k].edges[e].id << "," << k + 1 << ","
              << fmt(flows.cost_flow[i]) << "\n";
  }
  return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"stochastic user equilibria on hierarchical networks"};
  app.require_subcommand(1);

  std::string validate_input;
  auto* cmd_validate = app.add_subcommand("validate", "check a network file");
  cmd_validate->add_option("network", validate_input, "network file")->required();

  SolveArgs solve_args;
  auto* cmd_solve = app.add_subcommand("solve", "compute the equilibrium via the dual");
  cmd_solve->add_option("network", solve_args.input, "network file")->required();
  cmd_solve->add_option("--eps", solve_args.cfg.eps, "duality gap target");
  cmd_solve->add_option("--max-iters", solve_args.cfg.max_iters, "iteration budget");
  cmd_solve->add_option("--gamma-min", solve_args.cfg.gamma_min, "temperature floor");
  cmd_solve->add_option("--checkpoint-period", solve_args.cfg.checkpoint_period,
                        "iterations between gap checks");
  cmd_solve->add_option("--l0", solve_args.cfg.l0, "initial Lipschitz estimate");
  cmd_solve->add_option("--out-dir", solve_args.out_dir, "output directory");

  SimulateArgs sim_args;
  auto* cmd_sim = app.add_subcommand("simulate", "integrate or simulate the dynamics");
  cmd_sim->add_option("network", sim_args.input, "network file")->required();
  cmd_sim->add_option("--lambda", sim_args.cfg.lambdas, "revision rate per level");
  cmd_sim->add_option("--horizon", sim_args.cfg.horizon, "time horizon T");
  cmd_sim->add_option("--step", sim_args.cfg.ode_step, "Euler step h");
  cmd_sim->add_option("--agents", sim_args.cfg.agents_per_demand,
                      "agents per unit demand (M)");
  cmd_sim->add_option("--chain-rate", sim_args.cfg.steps_per_unit_time,
                      "chain steps per unit time (N)");
  cmd_sim->add_option("--seed", sim_args.cfg.seed, "rng seed");
  cmd_sim->add_option("--sample-every", sim_args.cfg.sample_every, "recording stride");
  cmd_sim->add_option("--mode", sim_args.mode, "ode | agents")
      ->check(CLI::IsMember({"ode", "agents"}));
  cmd_sim->add_option("--out-dir", sim_args.out_dir, "output directory");

  OracleArgs oracle_args;
  auto* cmd_oracle = app.add_subcommand("oracle", "brute-force reference equilibrium");
  cmd_oracle->add_option("network", oracle_args.input, "network file")->required();
  cmd_oracle->add_option("--tol", oracle_args.opt.tol, "fixed-point residual");
  cmd_oracle->add_option("--path-cap", oracle_args.opt.path_cap, "enumeration cap");
  cmd_oracle->add_option("--out-dir", oracle_args.out_dir, "output directory");

  std::string flatten_input;
  fs::path flatten_out = default_out_dir();
  auto* cmd_flatten = app.add_subcommand("flatten", "collapse an equal-gamma hierarchy");
  cmd_flatten->add_option("network", flatten_input, "network file")->required();
  cmd_flatten->add_option("--out-dir", flatten_out, "output directory");

  auto* cmd_softpath = app.add_subcommand("softpath", "smoothed path computations");
  std::string softpath_input, softpath_tolls;
  auto* cmd_eval = cmd_softpath->add_subcommand("eval", "print soft values and flows");
  cmd_eval->add_option("network", softpath_input, "network file")->required();
  cmd_eval->add_option("--tolls", softpath_tolls, "toll CSV (edge,toll); default free flow");
  cmd_softpath->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*cmd_validate) return run_validate(validate_input);
    if (*cmd_solve) return run_solve(solve_args);
    if (*cmd_sim) return run_simulate(sim_args);
    if (*cmd_oracle) return run_oracle(oracle_args);
    if (*cmd_flatten) return run_flatten(flatten_input, flatten_out);
    if (*cmd_softpath && *cmd_eval) return run_softpath_eval(softpath_input, softpath_tolls);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

} // namespace nesteq::cli
