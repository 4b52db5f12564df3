#pragma once

// Small self-contained numeric tools used as independent references in
// tests: quadrature, 1-D search, bisection, finite differences. Kept apart
// from the library on purpose.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace testsupport {

// Adaptive Simpson quadrature of f over [a, b].
inline double simpson_slice(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb, double whole,
                               double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_slice(f, a, m, fa, flm, fm);
  const double right = simpson_slice(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson_slice(f, a, b, fa, fm, fb), tol,
                          48);
}

// Grid + refinement minimizer over [lo, hi].
inline double grid_minimize(const std::function<double(double)>& f, double lo,
                            double hi, int rounds = 60, int points = 200) {
  double best_x = lo, best_v = f(lo);
  for (int r = 0; r < rounds; ++r) {
    const double step = (hi - lo) / points;
    for (int i = 0; i <= points; ++i) {
      const double x = lo + i * step;
      const double v = f(x);
      if (v < best_v) {
        best_v = v;
        best_x = x;
      }
    }
    lo = std::max(lo, best_x - 2.0 * step);
    hi = std::min(hi, best_x + 2.0 * step);
    if (hi - lo < 1e-14 * (1.0 + std::abs(best_x))) break;
  }
  return best_x;
}

inline double grid_maximize(const std::function<double(double)>& f, double lo,
                            double hi) {
  return grid_minimize([&](double x) { return -f(x); }, lo, hi);
}

// Root of increasing g on [lo, hi].
inline double bisect(const std::function<double(double)>& g, double lo, double hi,
                     double tol = 1e-13) {
  double glo = g(lo);
  if (glo > 0.0) return lo;
  for (int i = 0; i < 200 && hi - lo > tol * (1.0 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace testsupport
