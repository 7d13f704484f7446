#pragma once

// Quadrature: symmetric triangle rules (reference weights summing to 1,
// multiply by the physical cell area) and a 1D adaptive Simpson routine for
// the probe integrals.

#include <cmath>
#include <functional>
#include <vector>

#include "pxfem/core.hpp"

namespace pxfem {

struct TriQuadPoint {
  double u, v;  // barycentric coordinates (1-u-v, u, v)
  double w;     // reference weight; each rule's weights sum to 1
};

struct TriRule {
  int degree;
  std::vector<TriQuadPoint> points;
};

// 6-point symmetric rule, exact for polynomials of degree <= 4.
inline const TriRule& tri_rule_degree4() {
  static const TriRule rule = [] {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    TriRule r{4, {}};
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      r.points.push_back({a, a, w});
      r.points.push_back({1.0 - 2.0 * a, a, w});
      r.points.push_back({a, 1.0 - 2.0 * a, w});
    }
    double sum = 0.0;
    for (auto& p : r.points) sum += p.w;
    for (auto& p : r.points) p.w /= sum;
    return r;
  }();
  return rule;
}

namespace detail {

struct Gl1d {
  std::vector<double> x, w;  // on [0,1], weights summing to 1
};

// Closed-form Gauss-Legendre nodes for n = 4 and n = 5.
inline Gl1d gauss_legendre01(int n) {
  Gl1d g;
  auto push = [&](double xm, double wm) {  // [-1,1] -> [0,1]
    g.x.push_back(0.5 * (1.0 + xm));
    g.w.push_back(0.5 * wm);
  };
  if (n == 4) {
    double r1 = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    double r2 = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
    double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
    push(-r2, w2); push(-r1, w1); push(r1, w1); push(r2, w2);
  } else if (n == 5) {
    double r1 = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    double r2 = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    double w0 = 128.0 / 225.0;
    double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    push(-r2, w2); push(-r1, w1); push(0.0, w0); push(r1, w1); push(r2, w2);
  } else {
    throw PreconditionError("gauss_legendre01 supports n = 4 or 5 only");
  }
  return g;
}

}  // namespace detail

// 20-point collapsed Gauss product rule, exact for degree <= 7; used to
// cross-check the assembly rule's quadrature error.
inline const TriRule& tri_rule_degree7() {
  static const TriRule rule = [] {
    // Map (s,t) in [0,1]^2 to (u,v) = (s(1-t), t); Jacobian (1-t) raises the
    // t-degree by one, hence 5 points in t against 4 in s.
    auto gs = detail::gauss_legendre01(4);
    auto gt = detail::gauss_legendre01(5);
    TriRule r{7, {}};
    for (std::size_t j = 0; j < gt.x.size(); ++j)
      for (std::size_t i = 0; i < gs.x.size(); ++i) {
        double t = gt.x[j], s = gs.x[i];
        // reference-area normalization: weights (1-t)*ws*wt sum to 1/2
        r.points.push_back({s * (1.0 - t), t, 2.0 * gs.w[i] * gt.w[j] * (1.0 - t)});
      }
    return r;
  }();
  return rule;
}

// Integral of f over the physical triangle.
template <class F>
double integrate_tri(const Tri& cell, const TriRule& rule, F&& f) {
  double area = cell.area();
  double sum = 0.0;
  for (const auto& q : rule.points) sum += q.w * f(cell.point(q.u, q.v));
  return area * sum;
}

namespace detail {

template <class F>
double simpson(F& f, double a, double fa, double b, double fb, double m,
               double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_step(F& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature of f on [a,b] with a relative tolerance.
template <class F>
double integrate_1d(F&& f, double a, double b, double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  double whole = detail::simpson(f, a, fa, b, fb, m, fm);
  double scale = std::max({std::abs(whole), std::abs(b - a), 1e-300});
  return detail::adaptive_step(f, a, fa, b, fb, m, fm, whole,
                               rel_tol * scale, 48);
}

}  // namespace pxfem
