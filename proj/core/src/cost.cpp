#include "nesteq/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nesteq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

CostParams CostParams::constant(double t0) {
  CostParams p;
  p.family = CostFamily::Constant;
  p.t0 = t0;
  return p;
}

CostParams CostParams::affine(double t0, double slope) {
  CostParams p;
  p.family = CostFamily::Affine;
  p.t0 = t0;
  p.slope = slope;
  return p;
}

CostParams CostParams::bpr(double t0, double capacity, double alpha, double beta) {
  CostParams p;
  p.family = CostFamily::Bpr;
  p.t0 = t0;
  p.capacity = capacity;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

CostParams CostParams::capacity_limited(double t0, double capacity) {
  CostParams p;
  p.family = CostFamily::CapacityLimited;
  p.t0 = t0;
  p.capacity = capacity;
  return p;
}

std::string CostParams::check() const {
  if (!(t0 >= 0.0) || !std::isfinite(t0)) return "free-flow cost must be finite and >= 0";
  switch (family) {
    case CostFamily::Constant:
      return {};
    case CostFamily::Affine:
      if (!(slope >= 0.0) || !std::isfinite(slope)) return "affine slope must be finite and >= 0";
      return {};
    case CostFamily::Bpr:
      if (!(t0 > 0.0)) return "bpr free-flow cost must be > 0";
      if (!(capacity > 0.0)) return "bpr capacity must be > 0";
      if (!(alpha > 0.0)) return "bpr alpha must be > 0";
      if (!(beta >= 1.0)) return "bpr beta must be >= 1";
      return {};
    case CostFamily::CapacityLimited:
      if (!(capacity > 0.0)) return "capacity must be > 0";
      return {};
  }
  return "unknown cost family";
}

double tau(const CostParams& p, double f) {
  switch (p.family) {
    case CostFamily::Constant:
      return p.t0;
    case CostFamily::Affine:
      return p.t0 + p.slope * f;
    case CostFamily::Bpr:
      return p.t0 * (1.0 + p.alpha * std::pow(f / p.capacity, p.beta));
    case CostFamily::CapacityLimited:
      if (f > p.capacity) {
        throw CapacityExceeded("flow " + std::to_string(f) + " exceeds capacity " +
                               std::to_string(p.capacity));
      }
      return p.t0;
  }
  return 0.0;
}

double tau_prime(const CostParams& p, double f) {
  switch (p.family) {
    case CostFamily::Constant:
    case CostFamily::CapacityLimited:
      return 0.0;
    case CostFamily::Affine:
      return p.slope;
    case CostFamily::Bpr:
      return p.t0 * p.alpha * p.beta * std::pow(f / p.capacity, p.beta - 1.0) / p.capacity;
  }
  return 0.0;
}

double sigma(const CostParams& p, double f) {
  switch (p.family) {
    case CostFamily::Constant:
      return p.t0 * f;
    case CostFamily::Affine:
      return p.t0 * f + 0.5 * p.slope * f * f;
    case CostFamily::Bpr:
      return p.t0 * f +
             p.t0 * p.alpha * p.capacity / (p.beta + 1.0) *
                 std::pow(f / p.capacity, p.beta + 1.0);
    case CostFamily::CapacityLimited:
      if (f > p.capacity) return kInf;
      return p.t0 * f;
  }
  return 0.0;
}

double sigma_star(const CostParams& p, double t) {
  // Domain boundaries admit one round-off's worth of slack: convex
  // combinations of boundary-feasible iterates can land an ulp outside.
  const double slack = 1e-12 * (1.0 + std::abs(p.t0));
  switch (p.family) {
    case CostFamily::Constant:
      return t <= p.t0 + slack ? 0.0 : kInf;
    case CostFamily::Affine:
      if (t <= p.t0) return 0.0;
      if (p.slope == 0.0) return t <= p.t0 + slack ? 0.0 : kInf;
      return (t - p.t0) * (t - p.t0) / (2.0 * p.slope);
    case CostFamily::Bpr: {
      if (t <= p.t0) return 0.0;
      const double u = std::pow((t - p.t0) / (p.t0 * p.alpha), 1.0 / p.beta);
      return p.beta / (p.beta + 1.0) * p.t0 * p.alpha * p.capacity *
             std::pow(u, p.beta + 1.0);
    }
    case CostFamily::CapacityLimited:
      if (t < p.t0 - slack) {
        throw OutOfDomain("sigma* of a capacitated edge is undefined below the free-flow cost");
      }
      return p.capacity * std::max(0.0, t - p.t0);
  }
  return 0.0;
}

void sigma_star_domain(const CostParams& p, double& lo, double& hi) {
  switch (p.family) {
    case CostFamily::Constant:
      lo = -kInf;
      hi = p.t0;
      return;
    case CostFamily::Affine:
      if (p.slope == 0.0) {
        lo = -kInf;
        hi = p.t0;
        return;
      }
      lo = -kInf;
      hi = kInf;
      return;
    case CostFamily::Bpr:
      lo = -kInf;
      hi = kInf;
      return;
    case CostFamily::CapacityLimited:
      lo = p.t0;
      hi = kInf;
      return;
  }
}

InverseTauResult inverse_tau(const CostParams& p, double t) {
  InverseTauResult r;
  switch (p.family) {
    case CostFamily::Constant:
      r.unique = false;
      r.flow = 0.0;
      r.lower = 0.0;
      r.upper = t < p.t0 ? 0.0 : kInf;
      return r;
    case CostFamily::Affine:
      if (p.slope == 0.0) {
        r.unique = false;
        r.lower = 0.0;
        r.upper = t < p.t0 ? 0.0 : kInf;
        return r;
      }
      r.flow = t <= p.t0 ? 0.0 : (t - p.t0) / p.slope;
      r.lower = r.upper = r.flow;
      return r;
    case CostFamily::Bpr:
      r.flow = t <= p.t0
                   ? 0.0
                   : p.capacity * std::pow((t - p.t0) / (p.t0 * p.alpha), 1.0 / p.beta);
      r.lower = r.upper = r.flow;
      return r;
    case CostFamily::CapacityLimited:
      r.unique = false;
      if (t < p.t0) {
        r.lower = r.upper = 0.0;
      } else if (t == p.t0) {
        r.lower = 0.0;
        r.upper = p.capacity;
      } else {
        r.lower = r.upper = p.capacity;
        r.flow = p.capacity;
      }
      return r;
  }
  return r;
}

bool is_smooth(const CostParams& p) {
  switch (p.family) {
    case CostFamily::Affine:
      return p.slope > 0.0;
    case CostFamily::Bpr:
      return true;
    default:
      return false;
  }
}

namespace {

// Root of g(t) = step * inverse_tau(t) + t - v on (t0, v), where g is
// strictly increasing. Newton with a bisection safeguard.
double prox_smooth(const CostParams& p, double v, double step) {
  double lo = p.t0;
  double hi = v;
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = inverse_tau(p, t).flow;
    const double g = step * f + t - v;
    if (std::abs(g) <= 1e-12) return t;
    if (g > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    double gp = 1.0;
    if (p.family == CostFamily::Affine) {
      gp += step / p.slope;
    } else if (p.family == CostFamily::Bpr && t > p.t0) {
      const double u = (t - p.t0) / (p.t0 * p.alpha);
      gp += step * p.capacity / (p.beta * p.t0 * p.alpha) * std::pow(u, 1.0 / p.beta - 1.0);
    }
    double next = t - g / gp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return t;
}

} // namespace

double prox_composite(const CostParams& p, double v, double step) {
  switch (p.family) {
    case CostFamily::Constant:
      return std::min(v, p.t0);
    case CostFamily::Affine:
      if (p.slope == 0.0) return std::min(v, p.t0);
      if (v <= p.t0) return v;
      return prox_smooth(p, v, step);
    case CostFamily::Bpr:
      if (v <= p.t0) return v;
      return prox_smooth(p, v, step);
    case CostFamily::CapacityLimited:
      return std::max(p.t0, v - step * p.capacity);
  }
  return v;
}

} // namespace nesteq
