#pragma once

// Shared oracle helpers for the test suite: independent numerics that the
// library results are checked against.

#include <algorithm>
#include <cmath>
#include <utility>

namespace testsupport {

// Central finite difference.
template <class F>
double fd_derivative(F&& f, double t, double h = 1e-6) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

// Eigenvalues of the symmetric 2x2 matrix [[a, b], [b, d]], ascending.
inline std::pair<double, double> eig2x2_sym(double a, double b, double d) {
  double mean = 0.5 * (a + d);
  double disc = std::hypot(0.5 * (a - d), b);
  return {mean - disc, mean + disc};
}

// Maximum of a unimodal-ish f over [lo, hi]: coarse scan plus local ternary
// refinement around the best sample.
template <class F>
double max_scan(F&& f, double lo, double hi, int n = 2000) {
  double best = -1e300, arg = lo;
  for (int i = 0; i <= n; ++i) {
    double s = lo + (hi - lo) * i / n;
    double v = f(s);
    if (v > best) {
      best = v;
      arg = s;
    }
  }
  double a = std::max(lo, arg - (hi - lo) / n);
  double b = std::min(hi, arg + (hi - lo) / n);
  for (int it = 0; it < 200; ++it) {
    double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      a = m1;
    else
      b = m2;
  }
  return std::max(best, f(0.5 * (a + b)));
}

}  // namespace testsupport
