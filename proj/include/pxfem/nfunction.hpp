#pragma once

// The x-dependent N-function family phi(x,t), its shifted versions and
// conjugates, the flux tensors A and F, and the pointwise inequalities the
// error analysis rests on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/exponent.hpp"

namespace pxfem {

enum class PhiVariant {
  Integral,    // phi(x,t) = int_0^t (kappa+s)^(p(x)-2) s ds; drives the PDE
  PlainPower,  // phi(x,t) = t^p(x); drives the modular/key-estimate probes
};

struct PhiFamily {
  ExponentField exponent;
  double kappa;
  PhiVariant variant;

  PhiFamily(ExponentField e, double k, PhiVariant v = PhiVariant::Integral)
      : exponent(std::move(e)), kappa(k), variant(v) {
    if (!(kappa >= 0.0 && kappa <= 1.0))
      throw PreconditionError("kappa must lie in [0,1]");
  }
};

namespace detail {

// int_0^t (base+tau)^(p-2) tau dtau.  Closed form; a short series around
// tau=0 guards the cancellation when t << base.
inline double shifted_core(double base, double p, double t) {
  if (t == 0.0) return 0.0;
  if (base == 0.0) return std::pow(t, p) / p;
  if (t <= 1e-3 * base) {
    double coef = 1.0, sum = 0.0, powr = 1.0, ratio = t / base;
    for (int k = 0; k <= 4; ++k) {
      sum += coef * powr / (k + 2);
      coef *= (p - 2.0 - k) / (k + 1.0);
      powr *= ratio;
    }
    return std::pow(base, p - 2.0) * t * t * sum;
  }
  return pow_diff(base, t, p) / p -
         base * pow_diff(base, t, p - 1.0) / (p - 1.0);
}

// Shift base and prefactor of the derivative: phi_a'(t) = scale*(base+t)^(p-2)*t.
struct ShiftParams {
  double base;
  double scale;
};

inline ShiftParams shift_params(const PhiFamily& fam, double p, double a) {
  if (fam.variant == PhiVariant::Integral) return {fam.kappa + a, 1.0};
  return {a, p};
}

}  // namespace detail

inline double phi_shifted(const PhiFamily& fam, Vec2 x, double a, double t) {
  if (a < 0.0 || t < 0.0)
    throw PreconditionError("phi_shifted needs a,t >= 0");
  double p = fam.exponent(x);
  auto [base, scale] = detail::shift_params(fam, p, a);
  return scale * detail::shifted_core(base, p, t);
}

// phi(x,t) with the exponent supplied directly (used by the frozen scheme,
// where p is piecewise constant in the cell rather than sampled from x).
inline double phi_value(const PhiFamily& fam, double p, double t) {
  if (t < 0.0) throw PreconditionError("phi_value needs t >= 0");
  auto [base, scale] = detail::shift_params(fam, p, 0.0);
  return scale * detail::shifted_core(base, p, t);
}

inline double phi(const PhiFamily& fam, Vec2 x, double t) {
  if (t < 0.0) throw PreconditionError("phi needs t >= 0");
  return phi_shifted(fam, x, 0.0, t);
}

inline double phi_prime(const PhiFamily& fam, Vec2 x, double a, double t) {
  if (a < 0.0 || t < 0.0)
    throw PreconditionError("phi_prime needs a,t >= 0");
  if (t == 0.0) return 0.0;
  double p = fam.exponent(x);
  auto [base, scale] = detail::shift_params(fam, p, a);
  return scale * std::pow(base + t, p - 2.0) * t;
}

inline double phi_dprime(const PhiFamily& fam, Vec2 x, double a, double t) {
  if (a < 0.0 || t < 0.0)
    throw PreconditionError("phi_dprime needs a,t >= 0");
  double p = fam.exponent(x);
  auto [base, scale] = detail::shift_params(fam, p, a);
  if (base + t == 0.0) {
    if (p < 2.0) return std::numeric_limits<double>::infinity();
    return p == 2.0 ? scale : 0.0;
  }
  return scale * std::pow(base + t, p - 3.0) * ((p - 1.0) * t + base);
}

// (phi_a)*(x,t) = sup_{s>=0} (st - phi_a(x,s)).
inline double phi_conjugate(const PhiFamily& fam, Vec2 x, double a, double t) {
  if (a < 0.0 || t < 0.0)
    throw PreconditionError("phi_conjugate needs a,t >= 0");
  if (t == 0.0) return 0.0;
  double p = fam.exponent(x);
  if (fam.variant == PhiVariant::PlainPower && a == 0.0) {
    // maximizer s = (t/p)^(1/(p-1))
    double s = std::pow(t / p, 1.0 / (p - 1.0));
    return s * t * (1.0 - 1.0 / p);
  }
  // phi_a' increases to infinity, so st - phi_a(s) is unimodal with its
  // maximum where phi_a'(s) = t.  Bracket the root of phi_a' = t within a
  // factor of two so the stopping width is relative to the maximizer's scale.
  double hi = 1.0;
  while (phi_prime(fam, x, a, hi) < t && hi < 1e280) hi *= 2.0;
  while (hi > 1e-280 && phi_prime(fam, x, a, 0.5 * hi) > t) hi *= 0.5;
  double lo = 0.0;
  auto g = [&](double s) { return s * t - phi_shifted(fam, x, a, s); };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double gc = g(c), gd = g(d);
  while (hi - lo > 1e-10 * hi) {
    if (gc > gd) {
      hi = d; d = c; gd = gc;
      c = hi - gr * (hi - lo); gc = g(c);
    } else {
      lo = c; c = d; gc = gd;
      d = lo + gr * (hi - lo); gd = g(d);
    }
  }
  return g(0.5 * (lo + hi));
}

// Gradient-shaped N x n matrix.
class Tensor {
 public:
  Tensor(int rows, int cols)
      : rows_(rows), cols_(cols), e_(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 1 || cols < 1) throw PreconditionError("bad tensor shape");
  }

  static Tensor row2(double x, double y) {
    Tensor t(1, 2);
    t(0, 0) = x;
    t(0, 1) = y;
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return e_[i * cols_ + j]; }
  double operator()(int i, int j) const { return e_[i * cols_ + j]; }

  double dot(const Tensor& o) const {
    check_shape(o);
    double s = 0.0;
    for (std::size_t k = 0; k < e_.size(); ++k) s += e_[k] * o.e_[k];
    return s;
  }

  double norm() const { return std::sqrt(dot(*this)); }

  Tensor operator+(const Tensor& o) const {
    check_shape(o);
    Tensor r = *this;
    for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] += o.e_[k];
    return r;
  }

  Tensor operator-(const Tensor& o) const {
    check_shape(o);
    Tensor r = *this;
    for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] -= o.e_[k];
    return r;
  }

  Tensor operator*(double s) const {
    Tensor r = *this;
    for (double& v : r.e_) v *= s;
    return r;
  }

 private:
  void check_shape(const Tensor& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw PreconditionError("tensor shape mismatch");
  }

  int rows_, cols_;
  std::vector<double> e_;
};

namespace detail {

// A(x,xi) = coef_A(|xi|) xi and F(x,xi) = coef_F(|xi|) xi.
inline double flux_coef_a(const PhiFamily& fam, double p, double r) {
  double keff = fam.variant == PhiVariant::Integral ? fam.kappa : 0.0;
  double scale = fam.variant == PhiVariant::Integral ? 1.0 : p;
  return scale * std::pow(keff + r, p - 2.0);
}

inline double flux_coef_f(const PhiFamily& fam, double p, double r) {
  double keff = fam.variant == PhiVariant::Integral ? fam.kappa : 0.0;
  double scale = fam.variant == PhiVariant::Integral ? 1.0 : p;
  return std::sqrt(scale) * std::pow(keff + r, 0.5 * (p - 2.0));
}

}  // namespace detail

inline Tensor flux_A(const PhiFamily& fam, Vec2 x, const Tensor& xi) {
  double r = xi.norm();
  if (r == 0.0) return Tensor(xi.rows(), xi.cols());
  return xi * detail::flux_coef_a(fam, fam.exponent(x), r);
}

inline Tensor flux_F(const PhiFamily& fam, Vec2 x, const Tensor& xi) {
  double r = xi.norm();
  if (r == 0.0) return Tensor(xi.rows(), xi.cols());
  return xi * detail::flux_coef_f(fam, fam.exponent(x), r);
}

// DA(x,xi) as the linear map W |-> iso*W + rad*(xi : W) xi, i.e.
// (kappa+|xi|)^(p-2) Id + (p-2)(kappa+|xi|)^(p-3) (xi (x) xi)/|xi|.
struct FluxJacobian {
  double iso;
  double rad;
  Tensor xi;

  Tensor apply(const Tensor& w) const {
    Tensor r = w * iso;
    if (rad != 0.0) r = r + xi * (rad * xi.dot(w));
    return r;
  }

  // Dense n x n form for the scalar case (1 x n tensors), row-major.
  std::vector<double> matrix() const {
    int n = xi.cols();
    std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      m[i * n + i] = iso;
      for (int j = 0; j < n; ++j) m[i * n + j] += rad * xi(0, i) * xi(0, j);
    }
    return m;
  }
};

inline FluxJacobian flux_A_jacobian(const PhiFamily& fam, double p,
                                    const Tensor& xi) {
  double keff = fam.variant == PhiVariant::Integral ? fam.kappa : 0.0;
  double scale = fam.variant == PhiVariant::Integral ? 1.0 : p;
  double r = xi.norm();
  if (keff + r == 0.0) {
    if (p < 2.0)
      throw PreconditionError(
          "flux jacobian is singular at xi=0 with kappa=0 and p<2");
    return {p == 2.0 ? scale : 0.0, 0.0, xi};
  }
  double iso = scale * std::pow(keff + r, p - 2.0);
  double rad =
      r == 0.0 ? 0.0 : scale * (p - 2.0) * std::pow(keff + r, p - 3.0) / r;
  return {iso, rad, xi};
}

inline FluxJacobian flux_A_jacobian(const PhiFamily& fam, Vec2 x,
                                    const Tensor& xi) {
  return flux_A_jacobian(fam, fam.exponent(x), xi);
}

// The three equivalence ratios between the monotonicity product
// (A(P)-A(Q)):(P-Q) and, in order, |F(P)-F(Q)|^2, phi_{|P|}(|P-Q|), and
// phi''(|P|+|Q|)|P-Q|^2.  All are positive and, for fixed exponent bounds,
// confined to a uniform envelope.
struct FluxDifferenceRatios {
  double r1, r2, r3;
};

inline FluxDifferenceRatios flux_difference_ratios(const PhiFamily& fam,
                                                   Vec2 x, const Tensor& P,
                                                   const Tensor& Q) {
  Tensor D = P - Q;
  double dn = D.norm();
  if (dn == 0.0)
    throw PreconditionError("flux_difference_ratios needs P != Q");
  double num = (flux_A(fam, x, P) - flux_A(fam, x, Q)).dot(D);
  Tensor dF = flux_F(fam, x, P) - flux_F(fam, x, Q);
  return {num / dF.dot(dF),
          num / phi_shifted(fam, x, P.norm(), dn),
          num / (phi_dprime(fam, x, 0.0, P.norm() + Q.norm()) * dn * dn)};
}

// delta-Young inequality st <= delta phi_a(s) + c_delta (phi_a)*(t).
// For delta < 1 the convexity argument st = delta * s * (t/delta) together
// with the upper index q1' of (phi_a)* yields c_delta = delta^(1-q1'),
// q1 = min(2, p(x)).
struct YoungGap {
  double gap;
  double c_delta;
};

inline YoungGap young_gap(const PhiFamily& fam, Vec2 x, double a, double s,
                          double t, double delta) {
  if (s < 0.0 || t < 0.0) throw PreconditionError("young_gap needs s,t >= 0");
  if (!(delta > 0.0)) throw PreconditionError("young_gap needs delta > 0");
  double c = 1.0;
  if (delta < 1.0) {
    double q1 = std::min(2.0, fam.exponent(x));
    double q1c = q1 / (q1 - 1.0);
    c = std::pow(delta, 1.0 - q1c);
  }
  double gap = delta * phi_shifted(fam, x, a, s) +
               c * phi_conjugate(fam, x, a, t) - s * t;
  return {gap, c};
}

}  // namespace pxfem
