#pragma once

// Variable exponent fields p : [0,1]^2 -> (1, inf) with declared continuity
// moduli, per-cell range scans, and a randomized modulus probe.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "pxfem/core.hpp"

namespace pxfem {

enum class ExponentKind { Constant, Affine, Sinusoidal, HolderCusp, Table };

// p(x) is one of:
//   Constant    p = c
//   Affine      p = c + g . x
//   Sinusoidal  p = base + amp * sin(pi * x_1)
//   HolderCusp  p = base + amp * |x - center|^alpha
//   Table       bilinear interpolation of node values on a uniform grid
//
// Every field declares a modulus of continuity  |p(x)-p(y)| <= C |x-y|^alpha.
// Fields live on the closed unit square (a superset of every solver domain);
// evaluation outside it is an error, with a small tolerance absorbing
// floating-point drift of quadrature points.
class ExponentField {
 public:
  static ExponentField constant(double p) {
    ExponentField f(ExponentKind::Constant);
    f.c_ = p;
    f.validate();
    return f;
  }

  static ExponentField affine(double c, Vec2 grad) {
    ExponentField f(ExponentKind::Affine);
    f.c_ = c;
    f.grad_ = grad;
    f.validate();
    return f;
  }

  static ExponentField sinusoidal(double base, double amp) {
    ExponentField f(ExponentKind::Sinusoidal);
    f.c_ = base;
    f.amp_ = amp;
    f.validate();
    return f;
  }

  static ExponentField holder_cusp(double base, double amp, Vec2 center,
                                   double alpha) {
    ExponentField f(ExponentKind::HolderCusp);
    f.c_ = base;
    f.amp_ = amp;
    f.center_ = center;
    f.alpha_ = alpha;
    f.validate();
    return f;
  }

  // Node values on the uniform (nx x ny) grid over [0,1]^2, row-major with
  // index i + j*nx for node (i/(nx-1), j/(ny-1)).
  static ExponentField table(int nx, int ny, std::vector<double> values) {
    if (nx < 2 || ny < 2)
      throw PreconditionError("exponent table needs at least a 2x2 grid");
    if (static_cast<int>(values.size()) != nx * ny)
      throw PreconditionError("exponent table size does not match grid");
    ExponentField f(ExponentKind::Table);
    f.nx_ = nx;
    f.ny_ = ny;
    f.values_ = std::move(values);
    f.validate();
    return f;
  }

  ExponentKind kind() const { return kind_; }

  double operator()(Vec2 x) const {
    constexpr double tol = 1e-9;
    if (x.x < -tol || x.x > 1.0 + tol || x.y < -tol || x.y > 1.0 + tol)
      throw PreconditionError("exponent evaluated outside the unit square");
    switch (kind_) {
      case ExponentKind::Constant:
        return c_;
      case ExponentKind::Affine:
        return c_ + grad_.dot(x);
      case ExponentKind::Sinusoidal:
        return c_ + amp_ * std::sin(M_PI * x.x);
      case ExponentKind::HolderCusp:
        return c_ + amp_ * std::pow((x - center_).norm(), alpha_);
      case ExponentKind::Table:
        return eval_table(x);
    }
    return c_;
  }

  // Tight bounds over the unit square.
  double p_minus() const { return bounds().first; }
  double p_plus() const { return bounds().second; }

  // Declared modulus |p(x)-p(y)| <= modulus_constant * |x-y|^modulus_alpha.
  double modulus_alpha() const {
    return kind_ == ExponentKind::HolderCusp ? alpha_ : 1.0;
  }

  double modulus_constant() const {
    switch (kind_) {
      case ExponentKind::Constant:
        return 0.0;
      case ExponentKind::Affine:
        return grad_.norm();
      case ExponentKind::Sinusoidal:
        return amp_ * M_PI;
      case ExponentKind::HolderCusp:
        // | |x-c|^a - |y-c|^a | <= |x-y|^a by subadditivity of t^a.
        return amp_;
      case ExponentKind::Table:
        return table_lipschitz();
    }
    return 0.0;
  }

 private:
  explicit ExponentField(ExponentKind k) : kind_(k) {}

  std::pair<double, double> bounds() const {
    switch (kind_) {
      case ExponentKind::Constant:
        return {c_, c_};
      case ExponentKind::Affine: {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Vec2 v : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) {
          double p = (*this)(v);
          lo = std::min(lo, p);
          hi = std::max(hi, p);
        }
        return {lo, hi};
      }
      case ExponentKind::Sinusoidal:
        // sin(pi t) covers [0,1] for t in [0,1].
        return {std::min(c_, c_ + amp_), std::max(c_, c_ + amp_)};
      case ExponentKind::HolderCusp: {
        Vec2 nearest{std::clamp(center_.x, 0.0, 1.0),
                     std::clamp(center_.y, 0.0, 1.0)};
        double dmin = (nearest - center_).norm();
        double dmax = 0.0;
        for (Vec2 v : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}})
          dmax = std::max(dmax, (v - center_).norm());
        double lo = c_ + amp_ * std::pow(dmin, alpha_);
        double hi = c_ + amp_ * std::pow(dmax, alpha_);
        return {std::min(lo, hi), std::max(lo, hi)};
      }
      case ExponentKind::Table: {
        auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
        return {*lo, *hi};
      }
    }
    return {c_, c_};
  }

  void validate() const {
    if (kind_ == ExponentKind::HolderCusp &&
        !(alpha_ > 0.0 && alpha_ <= 1.0))
      throw PreconditionError("cusp exponent alpha must lie in (0,1]");
    if ((kind_ == ExponentKind::Sinusoidal ||
         kind_ == ExponentKind::HolderCusp) &&
        amp_ < 0.0)
      throw PreconditionError("exponent amplitude must be nonnegative");
    for (double v : values_)
      if (!std::isfinite(v))
        throw PreconditionError("exponent table values must be finite");
    auto [lo, hi] = bounds();
    if (!(lo > 1.0) || !std::isfinite(hi))
      throw PreconditionError("exponent field must satisfy 1 < p- <= p+ < inf");
  }

  double eval_table(Vec2 x) const {
    double fx = std::clamp(x.x, 0.0, 1.0) * (nx_ - 1);
    double fy = std::clamp(x.y, 0.0, 1.0) * (ny_ - 1);
    int i = std::min(static_cast<int>(fx), nx_ - 2);
    int j = std::min(static_cast<int>(fy), ny_ - 2);
    double u = fx - i, v = fy - j;
    auto at = [&](int ii, int jj) { return values_[ii + jj * nx_]; };
    return (1 - u) * (1 - v) * at(i, j) + u * (1 - v) * at(i + 1, j) +
           (1 - u) * v * at(i, j + 1) + u * v * at(i + 1, j + 1);
  }

  double table_lipschitz() const {
    double lx = 0.0, ly = 0.0;
    double hx = 1.0 / (nx_ - 1), hy = 1.0 / (ny_ - 1);
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i + 1 < nx_; ++i)
        lx = std::max(lx, std::abs(values_[i + 1 + j * nx_] -
                                   values_[i + j * nx_]) / hx);
    for (int j = 0; j + 1 < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        ly = std::max(ly, std::abs(values_[i + (j + 1) * nx_] -
                                   values_[i + j * nx_]) / hy);
    return std::hypot(lx, ly);
  }

  ExponentKind kind_;
  double c_ = 2.0;
  Vec2 grad_{0, 0};
  double amp_ = 0.0;
  Vec2 center_{0, 0};
  double alpha_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<double> values_;
};

struct CellExponentRange {
  double p_min;
  double p_max;
  Vec2 argmin;  // point realizing p_min among the scanned points
};

// Range of p over a triangle.  Constant and affine fields are resolved
// exactly from the vertices; other kinds are scanned on the deterministic
// barycentric lattice of the given order ((order+1)(order+2)/2 points,
// default 15).  Ties pick the first lattice point in enumeration order.
inline CellExponentRange exponent_range_on_cell(const ExponentField& p,
                                                const Tri& cell,
                                                int order = 4) {
  if (order < 1) throw PreconditionError("lattice order must be >= 1");
  CellExponentRange r{std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(),
                      cell.a};
  auto visit = [&](Vec2 x) {
    double v = p(x);
    if (v < r.p_min) {
      r.p_min = v;
      r.argmin = x;
    }
    r.p_max = std::max(r.p_max, v);
  };
  if (p.kind() == ExponentKind::Constant || p.kind() == ExponentKind::Affine) {
    visit(cell.a);
    visit(cell.b);
    visit(cell.c);
    return r;
  }
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j)
      visit(cell.point(static_cast<double>(i) / order,
                       static_cast<double>(j) / order));
  return r;
}

// Empirical modulus constant sup |p(x)-p(y)| / |x-y|^alpha over seeded
// uniform pairs in the unit square.  For a fixed seed the estimate is
// nondecreasing in n_samples (draws are a prefix sequence), and it never
// exceeds the declared modulus_constant of the field.
inline double holder_probe(const ExponentField& p, std::uint64_t seed,
                           int n_samples) {
  if (n_samples < 1) throw PreconditionError("holder_probe needs n >= 1");
  Rng rng(seed);
  double worst = 0.0;
  double alpha = p.modulus_alpha();
  for (int k = 0; k < n_samples; ++k) {
    Vec2 x{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
    Vec2 y{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
    double d = (x - y).norm();
    if (d == 0.0) continue;
    worst = std::max(worst, std::abs(p(x) - p(y)) / std::pow(d, alpha));
  }
  return worst;
}

}  // namespace pxfem
