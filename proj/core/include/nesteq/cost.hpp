#pragma once

#include <string>

#include "nesteq/errors.hpp"

namespace nesteq {

/// Analytic edge cost families. All are nondecreasing on their domain with
/// tau(0) equal to the free-flow cost t0, so that every conjugate and inverse
/// below stays closed-form (or 1-D Newton at worst).
enum class CostFamily {
  Constant,        // tau(f) = t0
  Affine,          // tau(f) = t0 + slope * f
  Bpr,             // tau(f) = t0 * (1 + alpha * (f / capacity)^beta)
  CapacityLimited, // tau(f) = t0 on [0, capacity]; no flow admitted beyond
};

struct CostParams {
  CostFamily family = CostFamily::Constant;
  double t0 = 0.0;       // free-flow cost, all families
  double slope = 0.0;    // Affine
  double capacity = 0.0; // Bpr, CapacityLimited
  double alpha = 0.0;    // Bpr
  double beta = 1.0;     // Bpr (beta >= 1 keeps sigma convex)

  static CostParams constant(double t0);
  static CostParams affine(double t0, double slope);
  static CostParams bpr(double t0, double capacity, double alpha, double beta);
  static CostParams capacity_limited(double t0, double capacity);

  /// Empty string if the parameters are admissible, otherwise a description
  /// of what is wrong (used by network validation).
  std::string check() const;
};

/// Travel cost at flow f. Throws CapacityExceeded for CapacityLimited edges
/// with f > capacity.
double tau(const CostParams& p, double f);

/// d tau / d f (one-sided at capacity for CapacityLimited, where it is 0).
double tau_prime(const CostParams& p, double f);

/// Potential sigma(f) = integral of tau over [0, f]. Returns +inf for
/// CapacityLimited flows beyond capacity (sentinel, not an error, so the
/// primal objective can report infeasibility).
double sigma(const CostParams& p, double f);

/// Legendre conjugate sigma*(t) = max_f { f t - sigma(f) }, f ranging over
/// the admissible flows. Smooth families: 0 for t <= t0, closed form above.
/// Constant: 0 on t <= t0, +inf above (flow is unbounded there).
/// CapacityLimited: capacity * (t - t0) on t >= t0; throws OutOfDomain below.
double sigma_star(const CostParams& p, double t);

/// Domain of sigma* as a closed interval [lo, hi] in t (hi may be +inf,
/// lo may be -inf).
void sigma_star_domain(const CostParams& p, double& lo, double& hi);

struct InverseTauResult {
  bool unique = true; // false for Constant / CapacityLimited at t == t0
  double flow = 0.0;  // the inverse when unique; lower endpoint otherwise
  double lower = 0.0; // subdifferential interval of sigma* at t
  double upper = 0.0;
};

/// Flow f with tau(f) = t. Smooth families return the closed-form inverse
/// (0 for t <= t0). Constant and CapacityLimited are set-valued: the result
/// reports the subdifferential interval and the solver treats those edges as
/// composite terms instead.
InverseTauResult inverse_tau(const CostParams& p, double t);

/// argmin over t in dom sigma* of { step * sigma*(t) + (t - v)^2 / 2 }.
/// Closed form for Constant / CapacityLimited; safeguarded Newton (residual
/// <= 1e-12) for the smooth families.
double prox_composite(const CostParams& p, double v, double step);

/// True when sigma* is differentiable everywhere on its (full-line) domain,
/// i.e. the edge belongs in the smooth part of the dual objective.
bool is_smooth(const CostParams& p);

} // namespace nesteq
