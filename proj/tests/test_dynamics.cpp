#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nesteq/dualsolve.hpp"
#include "nesteq/dynamics.hpp"
#include "support/fixtures.hpp"

using namespace nesteq;
using namespace testsupport;

namespace {

int cost_index_of(const CompiledNetwork& net, const std::string& id) {
  for (const auto& lvl : net.levels) {
    for (const auto& e : lvl.edges) {
      if (e.id == id) return e.cost_index;
    }
  }
  return -1;
}

} // namespace

TEST_CASE("ode: equilibrium start stays put") {
  // Uniform initialization is the equilibrium of a symmetric net.
  const auto net = compile(parallel_identical(2, 0.5, 2.0));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0};
  cfg.horizon = 5.0;
  cfg.ode_step = 0.01;
  cfg.sample_every = 100;
  const Trajectory traj = ode_integrate(net, cfg);
  for (const auto& s : traj.samples) {
    CHECK(s.cost_flow[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.cost_flow[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(traj.final_drift <= 1e-12);
}

TEST_CASE("ode: asymmetric start converges to the symmetric split") {
  const auto net = compile(parallel_identical(2, 0.5, 2.0));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0};
  cfg.horizon = 30.0;
  cfg.ode_step = 0.01;
  cfg.sample_every = 500;
  cfg.initial_tolls = {0.2, 1.9}; // skewed perceived costs at the start
  const Trajectory traj = ode_integrate(net, cfg);
  CHECK(traj.samples.front().cost_flow[0] > 1.5);
  CHECK(traj.samples.back().cost_flow[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(traj.samples.back().cost_flow[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ode: pigou endpoint hits the solver equilibrium") {
  const auto net = compile(pigou(0.1, 1.0));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0};
  cfg.horizon = 50.0;
  cfg.ode_step = 0.005;
  cfg.sample_every = 1000;
  const Trajectory traj = ode_integrate(net, cfg);
  CHECK(traj.final_drift <= 1e-6);

  const auto sol = solve(net, {.eps = 1e-10});
  REQUIRE(sol.certificate.converged);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    CHECK(std::abs(traj.final_state.cost_flow[i] - sol.flows.cost_flow[i]) <= 1e-4);
  }
}

TEST_CASE("ode: equal-gamma trajectories descend the primal objective") {
  for (const HierNetwork& h : {pigou(0.2, 1.5), two_level(0.4, 0.4, 1.2)}) {
    const auto net = compile(h);
    DynamicsConfig cfg;
    cfg.lambdas.assign(net.level_count(), 1.0);
    cfg.horizon = 10.0;
    cfg.ode_step = 0.005;
    cfg.sample_every = 1;
    cfg.initial_tolls = free_flow_tolls(net);
    const Trajectory traj = ode_integrate(net, cfg);
    REQUIRE(traj.equal_gamma);
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
      CHECK(traj.samples[i].psi <=
            traj.samples[i - 1].psi + 1e-8 * (1.0 + std::abs(traj.samples[i - 1].psi)));
    }
  }
}

TEST_CASE("ode: timescale separation tracks the hierarchical equilibrium") {
  const auto net = compile(two_level(0.5, 0.25, 1.5));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0, 10.0};
  cfg.horizon = 40.0;
  cfg.ode_step = 0.002;
  cfg.sample_every = 2000;
  const Trajectory traj = ode_integrate(net, cfg);
  CHECK(traj.final_drift <= 1e-6);

  const auto sol = solve(net, {.eps = 1e-10});
  REQUIRE(sol.certificate.converged);
  for (int i = 0; i < net.cost_edge_count; ++i) {
    CHECK(std::abs(traj.final_state.cost_flow[i] - sol.flows.cost_flow[i]) <= 1e-3);
  }
}

TEST_CASE("ode: conservation holds along the trajectory") {
  const auto net = compile(three_level(0.5, 0.4, 0.3, 1.3));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0, 3.0, 9.0};
  cfg.horizon = 2.0;
  cfg.ode_step = 0.01;
  cfg.sample_every = 50;
  const Trajectory traj = ode_integrate(net, cfg);
  const FlowState& fs = traj.final_state;
  for (int k = 0; k < net.level_count(); ++k) {
    for (std::size_t od = 0; od < fs.arcs[k].size(); ++od) {
      double served = 0.0;
      for (double s : fs.arcs[k][od].stop) served += s;
      CHECK(served == doctest::Approx(fs.od_demand[k][od]).epsilon(1e-10));
    }
  }
}

TEST_CASE("ode: timescale ratios are reported") {
  const auto net = compile(two_level(0.5, 0.25, 1.0));
  DynamicsConfig cfg;
  cfg.lambdas = {1.0, 10.0};
  cfg.horizon = 0.5;
  cfg.ode_step = 0.01;
  const Trajectory traj = ode_integrate(net, cfg);
  REQUIRE(traj.timescale_ratios.size() == 1);
  CHECK(traj.timescale_ratios[0] == doctest::Approx(10.0));
}

TEST_CASE("ode: unstable step is rejected") {
  const auto net = compile(pigou());
  DynamicsConfig cfg;
  cfg.lambdas = {5.0};
  cfg.ode_step = 0.5;
  CHECK_THROWS_AS(ode_integrate(net, cfg), UnstableStep);
}

TEST_CASE("agents: frozen chain when rates vanish") {
  const auto net = compile(pigou(0.2, 1.0));
  DynamicsConfig cfg;
  cfg.lambdas = {0.0};
  cfg.horizon = 3.0;
  cfg.agents_per_demand = 50;
  cfg.steps_per_unit_time = 5;
  cfg.sample_every = 1;
  cfg.seed = 5;
  const Trajectory traj = simulate_agents(net, cfg);
  for (const auto& s : traj.samples) {
    CHECK(s.cost_flow[0] == doctest::Approx(traj.samples[0].cost_flow[0]));
    CHECK(s.cost_flow[1] == doctest::Approx(traj.samples[0].cost_flow[1]));
  }
}

TEST_CASE("agents: single route carries everything") {
  HierNetwork h = pigou(0.2, 1.0);
  h.levels[0].edges.pop_back();
  const auto net = compile(h);
  DynamicsConfig cfg;
  cfg.lambdas = {2.0};
  cfg.horizon = 2.0;
  cfg.agents_per_demand = 40;
  cfg.steps_per_unit_time = 10;
  cfg.sample_every = 4;
  const Trajectory traj = simulate_agents(net, cfg);
  for (const auto& s : traj.samples) {
    CHECK(s.cost_flow[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("agents: stationary mean matches the mean-field limit") {
  const auto net = compile(pigou(0.2, 2.0));
  DynamicsConfig ode_cfg;
  ode_cfg.lambdas = {1.0};
  ode_cfg.horizon = 60.0;
  ode_cfg.ode_step = 0.01;
  ode_cfg.sample_every = 6000;
  const Trajectory limit = ode_integrate(net, ode_cfg);
  const int low = cost_index_of(net, "low");

  DynamicsConfig cfg;
  cfg.lambdas = {1.0};
  cfg.horizon = 400.0;
  cfg.agents_per_demand = 10000.0 / 2.0; // 10^4 agents total
  cfg.steps_per_unit_time = 5;
  cfg.sample_every = 25;
  cfg.seed = 42;
  const Trajectory traj = simulate_agents(net, cfg);

  // Time average after burn-in, batched standard error.
  std::vector<double> vals;
  for (std::size_t i = traj.samples.size() / 4; i < traj.samples.size(); ++i) {
    vals.push_back(traj.samples[i].cost_flow[low]);
  }
  const int batches = 20;
  const std::size_t per = vals.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += vals[i];
    means.push_back(s / per);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  var /= batches - 1;
  const double se = std::sqrt(var / batches);
  CHECK(std::abs(mean - limit.final_state.cost_flow[low]) <= 3.0 * se + 1e-3);
}

namespace {

// Per-edge stationary means of an agent run (time average after burn-in)
// plus batched standard errors.
struct StationaryStats {
  std::vector<double> mean, se;
};

StationaryStats stationary_stats(const CompiledNetwork& net, const Trajectory& traj) {
  StationaryStats out;
  for (int i = 0; i < net.cost_edge_count; ++i) {
    std::vector<double> vals;
    for (std::size_t s = traj.samples.size() / 4; s < traj.samples.size(); ++s) {
      vals.push_back(traj.samples[s].cost_flow[i]);
    }
    const int batches = 12;
    const std::size_t per = vals.size() / batches;
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
      double s = 0.0;
      for (std::size_t j = b * per; j < (b + 1) * per; ++j) s += vals[j];
      means.push_back(s / per);
    }
    double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= batches - 1;
    out.mean.push_back(mean);
    out.se.push_back(std::sqrt(var / batches));
  }
  return out;
}

} // namespace

TEST_CASE("agents: equal-temperature hierarchy matches the mean field exactly") {
  // With equal temperatures a level-1 resample draws sub-routes from the same
  // conditional as a level-2 resample, so the chain's stationary point is the
  // hierarchical equilibrium at any rate ratio.
  const auto net = compile(two_level(0.4, 0.4, 2.0));
  DynamicsConfig ode_cfg;
  ode_cfg.lambdas = {1.0, 5.0};
  ode_cfg.horizon = 40.0;
  ode_cfg.ode_step = 0.01;
  ode_cfg.sample_every = 4000;
  const Trajectory limit = ode_integrate(net, ode_cfg);
  REQUIRE(limit.final_drift < 1e-5);

  DynamicsConfig cfg;
  cfg.lambdas = {1.0, 5.0};
  cfg.horizon = 300.0;
  cfg.agents_per_demand = 2000;
  cfg.steps_per_unit_time = 10;
  cfg.sample_every = 50;
  cfg.seed = 17;
  const StationaryStats stats = stationary_stats(net, simulate_agents(net, cfg));
  for (int i = 0; i < net.cost_edge_count; ++i) {
    CHECK(std::abs(stats.mean[i] - limit.final_state.cost_flow[i]) <=
          3.0 * stats.se[i] + 2e-3);
  }
}

TEST_CASE("agents: separation drives the sub-route conditional to its own logit") {
  // At a finite rate ratio a fraction lambda1/(lambda1+lambda2) of sub-routes
  // was last sampled during an upper-level revision (at the upper
  // temperature); as the ratio grows, the stationary conditional split of the
  // opened OD pair approaches the self-consistent logit at its own
  // temperature.
  const auto net = compile(two_level(0.6, 0.2, 2.0));
  int ia = -1, ib = -1;
  for (const auto& e : net.levels[1].edges) {
    (e.id == "inner_a" ? ia : ib) = e.cost_index;
  }
  const double gamma2 = 0.2;

  auto conditional_deviation = [&](double ratio, int steps_per_unit) {
    DynamicsConfig cfg;
    cfg.lambdas = {1.0, ratio};
    cfg.horizon = 250.0;
    cfg.agents_per_demand = 1500;
    cfg.steps_per_unit_time = steps_per_unit;
    cfg.sample_every = 40;
    cfg.seed = 23;
    const StationaryStats stats = stationary_stats(net, simulate_agents(net, cfg));
    const double fa = stats.mean[ia], fb = stats.mean[ib];
    const double observed = fa / (fa + fb);
    const double ca = tau(net.levels[1].edges[0].cost, fa);
    const double cb = tau(net.levels[1].edges[1].cost, fb);
    const double predicted = 1.0 / (1.0 + std::exp((ca - cb) / gamma2));
    return std::abs(observed - predicted);
  };

  // Step rates keep lambda_k / N well below one (the discrete chain needs
  // slack there or simultaneous revisions overshoot and oscillate).
  const double coarse = conditional_deviation(2.0, 10);
  const double fine = conditional_deviation(20.0, 100);
  CHECK(fine < 0.5 * coarse);
}

TEST_CASE("agents: probability overflow guard") {
  const auto net = compile(pigou());
  DynamicsConfig cfg;
  cfg.lambdas = {20.0};
  cfg.steps_per_unit_time = 10;
  CHECK_THROWS_AS(simulate_agents(net, cfg), ProbabilityOverflow);
}

TEST_CASE("gumbel choice frequencies") {
  std::mt19937_64 rng(31);
  SUBCASE("singleton") {
    for (int i = 0; i < 100; ++i) {
      CHECK(sample_gumbel_choice({3.0}, 0.7, rng) == 0);
    }
  }
  SUBCASE("two equal costs") {
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      hits += sample_gumbel_choice({1.0, 1.0}, 1.0, rng) == 0;
    }
    CHECK(std::abs(hits / static_cast<double>(n) - 0.5) <= 0.002);
  }
  SUBCASE("two unequal costs") {
    const int n = 1000000;
    const double gamma = 1.0;
    const double expected = std::exp(-1.0) / (std::exp(-1.0) + std::exp(-2.0));
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      hits += sample_gumbel_choice({1.0, 2.0}, gamma, rng) == 0;
    }
    const double freq = hits / static_cast<double>(n);
    const double se = std::sqrt(expected * (1.0 - expected) / n);
    CHECK(std::abs(freq - expected) <= 3.0 * se);
  }
}

TEST_CASE("gumbel expectation identity") {
  std::mt19937_64 rng(37);
  SUBCASE("singleton") {
    const auto r = gumbel_expectation_check({3.0}, 0.8, 100000, rng);
    CHECK(r.analytic == doctest::Approx(-3.0));
    CHECK(std::abs(r.mc_mean - r.analytic) <= 3.0 * r.mc_stderr);
  }
  SUBCASE("symmetric pair at zero cost") {
    const auto r = gumbel_expectation_check({0.0, 0.0}, 1.0, 200000, rng);
    CHECK(r.analytic == doctest::Approx(std::log(2.0)));
    CHECK(std::abs(r.mc_mean - r.analytic) <= 3.0 * r.mc_stderr);
  }
  SUBCASE("unequal pair") {
    const auto r = gumbel_expectation_check({1.0, 2.0}, 0.5, 200000, rng);
    CHECK(r.analytic ==
          doctest::Approx(0.5 * std::log(std::exp(-2.0) + std::exp(-4.0))));
    CHECK(std::abs(r.mc_mean - r.analytic) <= 3.0 * r.mc_stderr);
  }
}
