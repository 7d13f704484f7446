#pragma once

// Clement-type quasi-interpolation: each vertex dof takes the value at the
// vertex of the L2-projection of the field onto affine functions over the
// vertex patch.  A boundary-preserving variant zeroes the Dirichlet dofs.
// Stability and approximability constants are probed empirically against
// the shifted modular bounds they are supposed to satisfy.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/fespace.hpp"
#include "pxfem/mesh.hpp"
#include "pxfem/nfunction.hpp"
#include "pxfem/quadrature.hpp"

namespace pxfem {

struct ScalarField {
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> grad;  // needed by the probes only
};

struct Interpolator {
  const FeSpace* space = nullptr;
  bool preserve_boundary = false;
};

namespace detail {

inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m,
                                    std::array<double, 3> r) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int row = col + 1; row < 3; ++row)
      if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
    std::swap(m[col], m[piv]);
    std::swap(r[col], r[piv]);
    if (m[col][col] == 0.0)
      throw PreconditionError("singular patch projection system");
    for (int row = col + 1; row < 3; ++row) {
      double f = m[row][col] / m[col][col];
      for (int j = col; j < 3; ++j) m[row][j] -= f * m[col][j];
      r[row] -= f * r[col];
    }
  }
  std::array<double, 3> x{};
  for (int row = 2; row >= 0; --row) {
    double s = r[row];
    for (int j = row + 1; j < 3; ++j) s -= m[row][j] * x[j];
    x[row] = s / m[row][row];
  }
  return x;
}

// Value at the patch center of the affine L2 fit over the vertex patch.
template <class F>
double patch_projection_value(const Triangulation& t, int vertex,
                              const F& value) {
  Vec2 xv = t.vertices[vertex];
  double scale = 0.0;
  for (int k : t.vertex_cells[vertex])
    scale = std::max(scale, cell_geometry(t, k).diameter());
  const TriRule& rule = tri_rule_degree4();
  std::array<std::array<double, 3>, 3> gram{};
  std::array<double, 3> rhs{};
  for (int k : t.vertex_cells[vertex]) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    for (const auto& q : rule.points) {
      Vec2 x = g.point(q.u, q.v);
      std::array<double, 3> b{1.0, (x.x - xv.x) / scale,
                              (x.y - xv.y) / scale};
      double w = q.w * area;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) gram[i][j] += w * b[i] * b[j];
        rhs[i] += w * b[i] * value(x);
      }
    }
  }
  return solve3(gram, rhs)[0];
}

}  // namespace detail

template <class F>
FeFunction interpolate(const Interpolator& op, const F& v) {
  const FeSpace& s = *op.space;
  const Triangulation& t = *s.mesh;
  FeFunction out = FeFunction::zero(s, op.preserve_boundary);
  for (int vert = 0; vert < static_cast<int>(t.vertices.size()); ++vert) {
    if (op.preserve_boundary && t.vertex_on_boundary[vert]) continue;
    out.nodal[vert] = detail::patch_projection_value(t, vert, v);
  }
  return out;
}

inline FeFunction interpolate(const Interpolator& op, const ScalarField& v) {
  return interpolate(op, v.value);
}

namespace detail {

inline void check_interp_admissible(const Triangulation& t, int k,
                                    const std::vector<double>& mean_f,
                                    const std::vector<double>& mean_gf,
                                    double h_k, double m,
                                    const std::vector<int>& cells) {
  double area = 0.0, f = 0.0, gf = 0.0;
  for (int kp : cells) {
    area += cell_geometry(t, kp).area();
    f += mean_f[kp];
    gf += mean_gf[kp];
  }
  double bound =
      std::max(1.0, std::pow(cell_geometry(t, k).area(), -m));
  if (std::max(f / area, h_k * gf / area) > bound)
    throw PreconditionError("inadmissible field on cell " +
                            std::to_string(k) +
                            ": patch means exceed max{1, |K|^-m}");
}

}  // namespace detail

// Empirical constant in the shifted stability bound: max over cells of
//   mean_K phi_a(.,|Pi_h v|) / (sum_{k<=1} mean_{S_K} phi_a(.,h_K^k |grad^k v|) + h_K^m)
inline double stability_probe(const Interpolator& op, const PhiFamily& fam,
                              const ScalarField& v, double a, double m) {
  const Triangulation& t = *op.space->mesh;
  FeFunction pv = interpolate(op, v);
  const TriRule& rule = tri_rule_degree4();
  const int nc = static_cast<int>(t.cells.size());

  std::vector<double> int_f(nc, 0.0), int_gf(nc, 0.0);
  for (int k = 0; k < nc; ++k) {
    Tri g = cell_geometry(t, k);
    int_f[k] = integrate_tri(g, rule,
                             [&](Vec2 x) { return std::abs(v.value(x)); });
    int_gf[k] =
        integrate_tri(g, rule, [&](Vec2 x) { return v.grad(x).norm(); });
  }

  double worst = 0.0;
  for (int k = 0; k < nc; ++k) {
    std::vector<int> cells = patch(t, k);
    Tri g = cell_geometry(t, k);
    double h_k = g.diameter();
    detail::check_interp_admissible(t, k, int_f, int_gf, h_k, m, cells);

    double lhs = integrate_tri(g, rule, [&](Vec2 x) {
                   return phi_shifted(fam, x, a, std::abs(pv.eval(k, x)));
                 }) /
                 g.area();
    double patch_area = 0.0, mod_f = 0.0, mod_gf = 0.0;
    for (int kp : cells) {
      Tri gp = cell_geometry(t, kp);
      patch_area += gp.area();
      mod_f += integrate_tri(gp, rule, [&](Vec2 x) {
        return phi_shifted(fam, x, a, std::abs(v.value(x)));
      });
      mod_gf += integrate_tri(gp, rule, [&](Vec2 x) {
        return phi_shifted(fam, x, a, h_k * v.grad(x).norm());
      });
    }
    double rhs = (mod_f + mod_gf) / patch_area + std::pow(h_k, m);
    worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

// Empirical constant in the shifted approximability bound: max over cells of
//   sum_{j<=1} mean_K phi_a(.,h_K^j |grad^j (v - Pi_h v)|)
//     / (mean_{S_K} phi_a(.,h_K |grad v|) + h_K^m)
inline double approximability_probe(const Interpolator& op,
                                    const PhiFamily& fam,
                                    const ScalarField& v, double a,
                                    double m) {
  const Triangulation& t = *op.space->mesh;
  FeFunction pv = interpolate(op, v);
  const TriRule& rule = tri_rule_degree4();
  const int nc = static_cast<int>(t.cells.size());

  std::vector<double> int_f(nc, 0.0), int_gf(nc, 0.0);
  for (int k = 0; k < nc; ++k) {
    Tri g = cell_geometry(t, k);
    int_f[k] = integrate_tri(g, rule,
                             [&](Vec2 x) { return std::abs(v.value(x)); });
    int_gf[k] =
        integrate_tri(g, rule, [&](Vec2 x) { return v.grad(x).norm(); });
  }

  double worst = 0.0;
  for (int k = 0; k < nc; ++k) {
    std::vector<int> cells = patch(t, k);
    Tri g = cell_geometry(t, k);
    double h_k = g.diameter();
    detail::check_interp_admissible(t, k, int_f, int_gf, h_k, m, cells);

    Vec2 gpv = pv.gradient(k);
    double lhs = integrate_tri(g, rule, [&](Vec2 x) {
                   double e0 = std::abs(v.value(x) - pv.eval(k, x));
                   double e1 = (v.grad(x) - gpv).norm();
                   return phi_shifted(fam, x, a, e0) +
                          phi_shifted(fam, x, a, h_k * e1);
                 }) /
                 g.area();
    double patch_area = 0.0, mod_gf = 0.0;
    for (int kp : cells) {
      Tri gp = cell_geometry(t, kp);
      patch_area += gp.area();
      mod_gf += integrate_tri(gp, rule, [&](Vec2 x) {
        return phi_shifted(fam, x, a, h_k * v.grad(x).norm());
      });
    }
    double rhs = mod_gf / patch_area + std::pow(h_k, m);
    worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

}  // namespace pxfem
