#pragma once

// Modulars and Luxemburg norms on axis-aligned cubes, plus the empirical
// constant probes for the Jensen-type key estimates and the shifted
// Poincare inequality.  All integrals use the midpoint lattice of the cube,
// on which the sampled function is treated as piecewise constant.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/exponent.hpp"
#include "pxfem/nfunction.hpp"

namespace pxfem {

struct Cube {
  Vec2 corner;  // lower-left
  double ell;   // side length

  double measure() const { return ell * ell; }
};

inline constexpr int kDefaultLatticeN = 64;

// Values (and optionally gradients) on the n x n cell-center lattice of a
// cube; index i + j*n for the cell centered at corner + ((i+1/2)h, (j+1/2)h).
class GridFunction {
 public:
  template <class F>
  static GridFunction sample(Cube q, int n, F&& f) {
    GridFunction g(q, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) g.values_[i + j * n] = f(g.point(i, j));
    return g;
  }

  template <class F, class G>
  static GridFunction sample_with_gradient(Cube q, int n, F&& f, G&& grad) {
    GridFunction g = sample(q, n, f);
    g.grads_.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) g.grads_[i + j * n] = grad(g.point(i, j));
    return g;
  }

  const Cube& cube() const { return q_; }
  int n() const { return n_; }
  bool has_gradient() const { return !grads_.empty(); }

  Vec2 point(int i, int j) const {
    double h = q_.ell / n_;
    return {q_.corner.x + (i + 0.5) * h, q_.corner.y + (j + 0.5) * h};
  }

  double value(int i, int j) const { return values_[i + j * n_]; }
  double& value(int i, int j) { return values_[i + j * n_]; }
  Vec2 gradient(int i, int j) const { return grads_[i + j * n_]; }

  double cell_measure() const { return sqr(q_.ell / n_); }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / values_.size();
  }

  double mean_abs() const {
    double s = 0.0;
    for (double v : values_) s += std::abs(v);
    return s / values_.size();
  }

  double mean_abs_gradient() const {
    if (!has_gradient())
      throw PreconditionError("grid function carries no gradient samples");
    double s = 0.0;
    for (const Vec2& g : grads_) s += g.norm();
    return s / grads_.size();
  }

  void scale(double t) {
    for (double& v : values_) v *= t;
    for (Vec2& g : grads_) g = g * t;
  }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v == 0.0; });
  }

 private:
  GridFunction(Cube q, int n) : q_(q), n_(n) {
    if (n < 1) throw PreconditionError("lattice needs n >= 1");
    if (!(q.ell > 0.0)) throw PreconditionError("cube needs positive side");
    values_.assign(static_cast<std::size_t>(n) * n, 0.0);
  }

  Cube q_;
  int n_;
  std::vector<double> values_;
  std::vector<Vec2> grads_;
};

// int_Q |f(x)|^p(x) dx on the lattice.
inline double modular(const GridFunction& f, const ExponentField& p) {
  double meas = f.cell_measure();
  double s = 0.0;
  for (int j = 0; j < f.n(); ++j)
    for (int i = 0; i < f.n(); ++i)
      s += std::pow(std::abs(f.value(i, j)), p(f.point(i, j)));
  return s * meas;
}

// inf{lambda > 0 : modular(f/lambda) <= 1}, by monotone bisection until the
// modular sits within 1e-8 of 1.
inline double luxemburg_norm(const GridFunction& f, const ExponentField& p) {
  if (f.is_zero()) return 0.0;
  auto modular_at = [&](double lambda) {
    double meas = f.cell_measure();
    double s = 0.0;
    for (int j = 0; j < f.n(); ++j)
      for (int i = 0; i < f.n(); ++i)
        s += std::pow(std::abs(f.value(i, j)) / lambda, p(f.point(i, j)));
    return s * meas;
  };
  double hi = 0.0;
  for (int j = 0; j < f.n(); ++j)
    for (int i = 0; i < f.n(); ++i)
      hi = std::max(hi, std::abs(f.value(i, j)));
  while (modular_at(hi) > 1.0) hi *= 2.0;
  double lo = hi;
  while (modular_at(lo) < 1.0) lo *= 0.5;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double m = modular_at(mid);
    if (std::abs(m - 1.0) <= 1e-8) return mid;
    (m > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline void check_cube_in_domain(const Cube& q) {
  constexpr double tol = 1e-12;
  if (q.ell > 1.0 + tol)
    throw PreconditionError("probe cubes need side length <= 1");
  if (q.corner.x < -tol || q.corner.y < -tol ||
      q.corner.x + q.ell > 1.0 + tol || q.corner.y + q.ell > 1.0 + tol)
    throw PreconditionError("probe cube leaves the unit square");
}

inline double admissible_bound(const Cube& q, double m) {
  return std::max(1.0, std::pow(q.measure(), -m));
}

}  // namespace detail

// Empirical constant in the shifted key estimate
//   psi_a(x, mean_Q |f|) <= c * mean_Q psi_a(.,|f|) + c |Q|^m
// for the plain-power family psi(x,t) = t^p(x); the unshifted (a=0) case is
// the key estimate itself.  Returns the max over lattice points x of
// LHS(x) / (mean modular + |Q|^m).
inline double shifted_key_probe(const ExponentField& p, const GridFunction& f,
                                double a, double m) {
  if (a < 0.0 || m <= 0.0)
    throw PreconditionError("shifted_key_probe needs a >= 0, m > 0");
  const Cube& q = f.cube();
  detail::check_cube_in_domain(q);
  double mf = f.mean_abs();
  if (a + mf > detail::admissible_bound(q, m))
    throw PreconditionError(
        "inadmissible sample: a + mean|f| exceeds max{1, |Q|^-m}");
  PhiFamily psi(p, 0.0, PhiVariant::PlainPower);
  double mean_mod = 0.0;
  for (int j = 0; j < f.n(); ++j)
    for (int i = 0; i < f.n(); ++i)
      mean_mod +=
          phi_shifted(psi, f.point(i, j), a, std::abs(f.value(i, j)));
  mean_mod /= sqr(static_cast<double>(f.n()));
  double rhs = mean_mod + std::pow(q.measure(), m);
  double worst = 0.0;
  for (int j = 0; j < f.n(); ++j)
    for (int i = 0; i < f.n(); ++i)
      worst = std::max(worst, phi_shifted(psi, f.point(i, j), a, mf));
  return worst / rhs;
}

inline double key_estimate_probe(const ExponentField& p,
                                 const GridFunction& f, double m) {
  return shifted_key_probe(p, f, 0.0, m);
}

// Empirical constant in the shifted Poincare inequality
//   int_Q psi_a(x, |u - <u>_Q| / l(Q)) dx
//     <= c int_Q psi_a(x, |grad u|) dx + c |Q|^m.
inline double poincare_shift_probe(const ExponentField& p,
                                   const GridFunction& u, double a,
                                   double m) {
  if (a < 0.0 || m <= 0.0)
    throw PreconditionError("poincare_shift_probe needs a >= 0, m > 0");
  if (!u.has_gradient())
    throw PreconditionError("poincare_shift_probe needs gradient samples");
  const Cube& q = u.cube();
  detail::check_cube_in_domain(q);
  if (a + u.mean_abs_gradient() > detail::admissible_bound(q, m))
    throw PreconditionError(
        "inadmissible sample: a + mean|grad u| exceeds max{1, |Q|^-m}");
  PhiFamily psi(p, 0.0, PhiVariant::PlainPower);
  double mean_u = u.mean();
  double meas = u.cell_measure();
  double lhs = 0.0, rhs = 0.0;
  for (int j = 0; j < u.n(); ++j)
    for (int i = 0; i < u.n(); ++i) {
      Vec2 x = u.point(i, j);
      lhs += phi_shifted(psi, x, a, std::abs(u.value(i, j) - mean_u) / q.ell);
      rhs += phi_shifted(psi, x, a, u.gradient(i, j).norm());
    }
  lhs *= meas;
  rhs = rhs * meas + std::pow(q.measure(), m);
  return lhs / rhs;
}

// Smooth random field with an analytic gradient, for probe sampling.
struct TrigField {
  struct Mode {
    double c, k1, k2, ph1, ph2;
  };
  std::vector<Mode> modes;
  double offset = 0.0;

  double operator()(Vec2 x) const {
    double s = offset;
    for (const auto& m : modes)
      s += m.c * std::sin(m.k1 * x.x + m.ph1) * std::sin(m.k2 * x.y + m.ph2);
    return s;
  }

  Vec2 grad(Vec2 x) const {
    Vec2 g{0.0, 0.0};
    for (const auto& m : modes) {
      g.x += m.c * m.k1 * std::cos(m.k1 * x.x + m.ph1) *
             std::sin(m.k2 * x.y + m.ph2);
      g.y += m.c * m.k2 * std::sin(m.k1 * x.x + m.ph1) *
             std::cos(m.k2 * x.y + m.ph2);
    }
    return g;
  }

  static TrigField random(Rng& rng, int n_modes, int k_max) {
    TrigField f;
    for (int j = 0; j < n_modes; ++j) {
      Mode m;
      m.c = uniform(rng, -1.0, 1.0);
      m.k1 = M_PI * (1 + static_cast<int>(uniform(rng, 0.0, k_max)));
      m.k2 = M_PI * (1 + static_cast<int>(uniform(rng, 0.0, k_max)));
      m.ph1 = uniform(rng, 0.0, 2.0 * M_PI);
      m.ph2 = uniform(rng, 0.0, 2.0 * M_PI);
      f.modes.push_back(m);
    }
    return f;
  }
};

// |trig field| + offset, rescaled so that mean_Q |f| hits the target.
inline GridFunction random_admissible_sample(const Cube& q, int n, Rng& rng,
                                             double target_mean_abs) {
  TrigField t = TrigField::random(rng, 3, 4);
  double floor_val = uniform(rng, 0.0, 0.5);
  GridFunction g = GridFunction::sample(
      q, n, [&](Vec2 x) { return std::abs(t(x)) + floor_val; });
  double mean = g.mean_abs();
  if (mean > 0.0) g.scale(target_mean_abs / mean);
  return g;
}

}  // namespace pxfem
