#pragma once

#include <string>

#include "nesteq/softpath.hpp"

namespace nesteq {

struct SolverConfig {
  double eps = 1e-6;       // duality gap target, cost x flow units
  int max_iters = 100000;
  double l0 = 0.0;         // initial Lipschitz estimate; <= 0 uses lipschitz_bound
  double line_search_up = 2.0;
  double line_search_down = 2.0;
  double gamma_min = 1e-3; // temperatures below this are clamped (with a warning)
  int checkpoint_period = 16;
};

struct Checkpoint {
  int iteration = 0;
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;      // measured at this checkpoint
  double best_gap = 0.0; // best certified gap up to this checkpoint
  double elapsed_seconds = 0.0;
};

struct Certificate {
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  bool converged = false;
  // Diagnostic only: the a-priori rate bound C * L2 * R2^2 / A_N evaluated
  // with the returned iterate standing in for the unknown optimum. The
  // measured gap above is the certificate; this is not a guarantee.
  double apriori_gap_bound = 0.0;
};

struct EquilibriumSolution {
  TollVector t_star;   // averaged main iterate of the best checkpoint
  FlowState flows;     // weighted primal averages (capacity-feasible form)
  Certificate certificate;
  std::vector<Checkpoint> trace;
  std::vector<std::string> warnings;
};

/// Dual objective gamma^1 psi^1(t/gamma^1) + sum_e sigma*_e(t_e).
/// Throws OutOfDomain when t leaves dom sigma*.
double dual_objective(const CompiledNetwork& net, const TollVector& t);

/// Accelerated composite gradient method on the dual, starting from the
/// free-flow costs, with adaptive backtracking on the Lipschitz estimate and
/// Theorem-style weighted primal averaging at the gradient points. Stops when
/// the measured duality gap certifies eps, or at max_iters (the returned
/// certificate then has converged == false).
EquilibriumSolution solve(const CompiledNetwork& net, const SolverConfig& cfg = {});

/// dual_objective(t_avg) + Psi(flows). Nonnegative up to round-off for any
/// feasible flows (weak duality); +inf when a capacitated edge is exceeded.
double duality_gap(const CompiledNetwork& net, const TollVector& t_avg,
                   const FlowState& flows);

/// Optimal congestion charges per cost edge: t - t0 for capacitated edges
/// (the Lagrange multiplier of the capacity constraint), f * tau'(f) for the
/// others (marginal-cost pricing).
std::vector<double> tolls(const CompiledNetwork& net, const EquilibriumSolution& sol);

} // namespace nesteq
