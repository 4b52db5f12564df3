#pragma once

#include <random>

#include "nesteq/softpath.hpp"

namespace nesteq {

struct DynamicsConfig {
  std::vector<double> lambdas;     // per-level revision rates (1/time)
  double horizon = 10.0;           // T
  double ode_step = 0.01;          // explicit Euler step h
  double agents_per_demand = 100;  // M: agents per unit of level-1 demand
  int steps_per_unit_time = 10;    // N: discrete chain steps per unit time
  std::uint64_t seed = 1;
  int sample_every = 10;           // record every this many steps
  // Start from the logit assignment at these tolls instead of the uniform
  // path distribution (empty = uniform, the zero-cost softmax).
  std::vector<double> initial_tolls;
};

struct TrajectorySample {
  double time = 0.0;
  std::vector<double> cost_flow;      // [global cost index]
  std::vector<double> expansion_flow; // [global expansion index]
  double psi = 0.0;                   // filled for equal-gamma ODE runs
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool equal_gamma = false;
  FlowState final_state;    // ODE runs: demand-scaled state at the horizon
  double final_drift = 0.0; // ODE runs: sup-norm of the drift at the horizon
  // Timescale-separation report: lambda[k+1]/lambda[k] per adjacent pair
  // (the multiscale attractor statement assumes these are large).
  std::vector<double> timescale_ratios;
};

/// Mean-field relaxation toward the per-level logit targets,
///   d state / dt = lambda_k * (logit target at current costs - state),
/// integrated by explicit Euler in normalized arc-flow coordinates (so
/// conservation is exact at every step). For equal temperatures the primal
/// objective is recorded along the trajectory. Throws UnstableStep when
/// h * max lambda >= 1.
Trajectory ode_integrate(const CompiledNetwork& net, const DynamicsConfig& cfg);

/// Finite-population Markov chain: each agent holds a complete nested path
/// and each step independently revises its level-k sub-path with probability
/// lambda_k/N times the number of level-k segments it carries (picking one
/// uniformly), sampling the replacement from the Gibbs distribution of full
/// sub-descriptors at temperature gamma_k and current costs. Records
/// empirical flows. Throws ProbabilityOverflow when the per-step revision
/// mass exceeds one.
Trajectory simulate_agents(const CompiledNetwork& net, const DynamicsConfig& cfg);

/// argmax_p { -costs[p] + xi_p } with i.i.d. Gumbel(scale gamma) noise
/// centered to mean zero; frequencies converge to the softmax of -costs/gamma.
int sample_gumbel_choice(const std::vector<double>& costs, double gamma,
                         std::mt19937_64& rng);

struct GumbelCheck {
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  double analytic = 0.0; // gamma * ln sum exp(-costs/gamma)
};

/// Monte-Carlo check of the perceived-cost identity
/// E[max_p {-g_p + xi_p}] = gamma * ln sum_p exp(-g_p / gamma).
GumbelCheck gumbel_expectation_check(const std::vector<double>& costs, double gamma,
                                     int samples, std::mt19937_64& rng);

} // namespace nesteq
