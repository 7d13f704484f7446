#pragma once

// P1 Galerkin discretization of -div((kappa+|grad v|)^(p(x)-2) grad v) = f
// with zero Dirichlet data, its frozen-exponent variant (p replaced per
// cell by its minimum p(x_K)), and a damped Newton energy-descent solver.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/exponent.hpp"
#include "pxfem/fespace.hpp"
#include "pxfem/interp.hpp"
#include "pxfem/mesh.hpp"
#include "pxfem/nfunction.hpp"
#include "pxfem/quadrature.hpp"
#include "pxfem/sparse.hpp"

namespace pxfem {

// Cellwise-constant exponent p_T, each cell pinned to its minimum.
struct FrozenExponent {
  std::vector<double> p_cell;
  std::vector<Vec2> sample_point;  // the argmin x_K per cell
};

inline FrozenExponent freeze(const Triangulation& t, const ExponentField& p,
                             int order = 4) {
  FrozenExponent f;
  f.p_cell.reserve(t.cells.size());
  f.sample_point.reserve(t.cells.size());
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    CellExponentRange r = exponent_range_on_cell(p, cell_geometry(t, k), order);
    f.p_cell.push_back(r.p_min);
    f.sample_point.push_back(r.argmin);
  }
  return f;
}

namespace detail {

inline const TriRule& assembly_rule(int degree) {
  if (degree <= 4) return tri_rule_degree4();
  return tri_rule_degree7();
}

struct ExponentSampler {
  const ExponentField* field = nullptr;
  const FrozenExponent* frozen = nullptr;
  double operator()(int cell, Vec2 x) const {
    return frozen ? frozen->p_cell[cell] : (*field)(x);
  }
};

inline std::array<Vec2, 3> hat_gradients(const Tri& g) {
  double inv2a = 1.0 / (2.0 * g.signed_area());
  Vec2 gb{(g.c.y - g.a.y) * inv2a, -(g.c.x - g.a.x) * inv2a};
  Vec2 gc{-(g.b.y - g.a.y) * inv2a, (g.b.x - g.a.x) * inv2a};
  return {Vec2{-gb.x - gc.x, -gb.y - gc.y}, gb, gc};
}

inline Vec2 cell_gradient(const Triangulation& t, const FeFunction& u, int k,
                          const std::array<Vec2, 3>& hats) {
  const auto& c = t.cells[k];
  Vec2 g{0.0, 0.0};
  for (int l = 0; l < 3; ++l) g = g + hats[l] * u.nodal[c[l]];
  return g;
}

}  // namespace detail

inline std::vector<double> assemble_load(const FeSpace& s,
                                          const std::function<double(Vec2)>& f,
                                          int quad_degree = 4) {
  const Triangulation& t = *s.mesh;
  const TriRule& rule = detail::assembly_rule(quad_degree);
  std::vector<double> b(s.n_free, 0.0);
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    const auto& c = t.cells[k];
    for (const auto& q : rule.points) {
      double fw = f(g.point(q.u, q.v)) * q.w * area;
      double lam[3] = {1.0 - q.u - q.v, q.u, q.v};
      for (int l = 0; l < 3; ++l) {
        int fi = s.free_index[c[l]];
        if (fi >= 0) b[fi] += fw * lam[l];
      }
    }
  }
  return b;
}

// Load that makes v_exact the weak solution: psi -> int A(.,grad v).grad psi.
// Always uses the exact exponent; freezing only changes the operator side.
inline std::vector<double> manufactured_rhs(const FeSpace& s,
                                            const PhiFamily& fam,
                                            const ScalarField& v_exact,
                                            int quad_degree = 4) {
  const Triangulation& t = *s.mesh;
  const TriRule& rule = detail::assembly_rule(quad_degree);
  std::vector<double> b(s.n_free, 0.0);
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    const auto& c = t.cells[k];
    auto hats = detail::hat_gradients(g);
    for (const auto& q : rule.points) {
      Vec2 x = g.point(q.u, q.v);
      Vec2 gv = v_exact.grad(x);
      double r = gv.norm();
      if (r == 0.0) continue;
      double coef = detail::flux_coef_a(fam, fam.exponent(x), r) * q.w * area;
      for (int l = 0; l < 3; ++l) {
        int fi = s.free_index[c[l]];
        if (fi >= 0) b[fi] += coef * gv.dot(hats[l]);
      }
    }
  }
  return b;
}

inline std::vector<double> assemble_residual(
    const FeSpace& s, const PhiFamily& fam, const FeFunction& u,
    const std::vector<double>& load, const FrozenExponent* frozen = nullptr,
    int quad_degree = 4) {
  const Triangulation& t = *s.mesh;
  const TriRule& rule = detail::assembly_rule(quad_degree);
  detail::ExponentSampler ps{&fam.exponent, frozen};
  std::vector<double> r(s.n_free);
  for (int i = 0; i < s.n_free; ++i) r[i] = -load[i];
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    const auto& c = t.cells[k];
    auto hats = detail::hat_gradients(g);
    Vec2 gu = detail::cell_gradient(t, u, k, hats);
    double rn = gu.norm();
    if (rn == 0.0) continue;
    for (const auto& q : rule.points) {
      Vec2 x = g.point(q.u, q.v);
      double coef = detail::flux_coef_a(fam, ps(k, x), rn) * q.w * area;
      for (int l = 0; l < 3; ++l) {
        int fi = s.free_index[c[l]];
        if (fi >= 0) r[fi] += coef * gu.dot(hats[l]);
      }
    }
  }
  return r;
}

inline CsrMatrix assemble_jacobian(const FeSpace& s, const PhiFamily& fam,
                                   const FeFunction& u,
                                   double kappa_solve = 0.0,
                                   const FrozenExponent* frozen = nullptr,
                                   int quad_degree = 4) {
  const Triangulation& t = *s.mesh;
  double keff = std::max(fam.kappa, kappa_solve);
  if (keff == 0.0 && fam.exponent.p_minus() < 2.0)
    throw PreconditionError(
        "jacobian needs kappa_solve regularization when p < 2 and kappa = 0");
  PhiFamily jfam = fam;
  jfam.kappa = keff;
  detail::ExponentSampler ps{&fam.exponent, frozen};

  std::vector<std::vector<int>> adj(s.n_free);
  for (const auto& c : t.cells)
    for (int l = 0; l < 3; ++l) {
      int fi = s.free_index[c[l]];
      if (fi < 0) continue;
      for (int m = 0; m < 3; ++m) {
        int fj = s.free_index[c[m]];
        if (fj >= 0) adj[fi].push_back(fj);
      }
    }
  CsrMatrix j = CsrMatrix::from_pattern(std::move(adj));

  const TriRule& rule = detail::assembly_rule(quad_degree);
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    const auto& c = t.cells[k];
    auto hats = detail::hat_gradients(g);
    Vec2 gu = detail::cell_gradient(t, u, k, hats);
    Tensor xi = Tensor::row2(gu.x, gu.y);
    for (const auto& q : rule.points) {
      Vec2 x = g.point(q.u, q.v);
      FluxJacobian dj = flux_A_jacobian(jfam, ps(k, x), xi);
      double w = q.w * area;
      for (int l = 0; l < 3; ++l) {
        int fi = s.free_index[c[l]];
        if (fi < 0) continue;
        for (int m = 0; m < 3; ++m) {
          int fj = s.free_index[c[m]];
          if (fj < 0) continue;
          double v = dj.iso * hats[l].dot(hats[m]);
          if (dj.rad != 0.0)
            v += dj.rad * gu.dot(hats[l]) * gu.dot(hats[m]);
          j.at(fi, fj) += w * v;
        }
      }
    }
  }
  return j;
}

// J(u) = int phi(x,|grad u|) dx - load . u  over the free dofs.
inline double energy(const FeSpace& s, const PhiFamily& fam,
                     const FeFunction& u, const std::vector<double>& load,
                     const FrozenExponent* frozen = nullptr,
                     int quad_degree = 4) {
  const Triangulation& t = *s.mesh;
  const TriRule& rule = detail::assembly_rule(quad_degree);
  detail::ExponentSampler ps{&fam.exponent, frozen};
  double e = 0.0;
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    auto hats = detail::hat_gradients(g);
    double rn = detail::cell_gradient(t, u, k, hats).norm();
    for (const auto& q : rule.points)
      e += q.w * area * phi_value(fam, ps(k, g.point(q.u, q.v)), rn);
  }
  for (int i = 0; i < s.n_free; ++i) e -= load[i] * u.nodal[s.free_vertices[i]];
  return e;
}

// max over cells of ||grad u_h||_inf(K) / mean_K |grad u_h|.  P1 gradients
// are cellwise constant, so both sides coincide exactly; zero cells count
// as 1 by convention.  Kept as a guard for any future space generalization.
inline double inverse_estimate_check(const FeSpace& s, const FeFunction& u) {
  const Triangulation& t = *s.mesh;
  double worst = 1.0;
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    double rn = u.gradient(k).norm();
    if (rn == 0.0) continue;
    worst = std::max(worst, rn / rn);
  }
  return worst;
}

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double kappa_solve = 1e-7;
  int quad_degree = 4;
};

enum class RhsKind { Function, Manufactured };

struct Problem {
  PhiFamily fam;
  RhsKind rhs_kind = RhsKind::Manufactured;
  std::function<double(Vec2)> f;  // used when rhs_kind == Function
  ScalarField v_exact;            // used when rhs_kind == Manufactured
  SolverOptions solver;
};

struct SolveStats {
  bool converged = false;
  int newton_iters = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  bool regularized = false;
  double kappa_solve_used = 0.0;
  std::vector<double> energy_history;
  long total_cg_iters = 0;
  bool used_direct = false;
};

struct SolveResult {
  FeFunction u;
  SolveStats stats;
};

inline SolveResult solve(const Problem& prob, const FeSpace& s,
                         bool frozen = false) {
  if (prob.fam.variant != PhiVariant::Integral)
    throw PreconditionError("the PDE flux uses the integral phi family");
  if (!(prob.solver.tol > 0.0))
    throw PreconditionError("solver tolerance must be positive");

  FrozenExponent fr;
  const FrozenExponent* frp = nullptr;
  if (frozen) {
    fr = freeze(*s.mesh, prob.fam.exponent);
    frp = &fr;
  }
  const int qd = prob.solver.quad_degree;
  std::vector<double> load =
      prob.rhs_kind == RhsKind::Function
          ? assemble_load(s, prob.f, qd)
          : manufactured_rhs(s, prob.fam, prob.v_exact, qd);

  SolveResult out{FeFunction::zero(s, true), {}};
  SolveStats& st = out.stats;
  st.kappa_solve_used = std::max(prob.fam.kappa, prob.solver.kappa_solve);
  st.regularized = st.kappa_solve_used != prob.fam.kappa;

  auto linf = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };

  std::vector<double> r =
      assemble_residual(s, prob.fam, out.u, load, frp, qd);
  double res_norm = linf(r);
  st.energy_history.push_back(energy(s, prob.fam, out.u, load, frp, qd));

  while (res_norm > prob.solver.tol && st.newton_iters < prob.solver.max_iter) {
    CsrMatrix j = assemble_jacobian(s, prob.fam, out.u,
                                    prob.solver.kappa_solve, frp, qd);
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    std::vector<double> d;
    if (s.n_free < 2000) {
      LinearSolveStats ls = dense_cholesky_solve(j, rhs, d);
      st.used_direct = true;
      (void)ls;
    } else {
      LinearSolveStats ls = cg_jacobi(j, rhs, d, 1e-12);
      st.total_cg_iters += ls.iterations;
    }

    double slope = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) slope += r[i] * d[i];
    double e0 = st.energy_history.back();
    double alpha = 1.0;
    FeFunction trial = out.u;
    double e1 = 0.0;
    bool accepted = false;
    bool have_trial_residual = false;
    std::vector<double> r_trial;
    double res_trial = 0.0;
    while (alpha >= 1e-12) {
      for (int i = 0; i < s.n_free; ++i)
        trial.nodal[s.free_vertices[i]] =
            out.u.nodal[s.free_vertices[i]] + alpha * d[i];
      e1 = energy(s, prob.fam, trial, load, frp, qd);
      if (e1 <= e0 + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      // Near convergence the predicted decrease drops below the rounding
      // noise of the energy; fall back to plain residual descent there.
      if (std::abs(e1 - e0) <=
          16.0 * std::numeric_limits<double>::epsilon() *
              (std::abs(e0) + std::abs(e1))) {
        r_trial = assemble_residual(s, prob.fam, trial, load, frp, qd);
        res_trial = linf(r_trial);
        if (res_trial < res_norm) {
          accepted = true;
          have_trial_residual = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // line search exhausted; report non-convergence
    out.u.nodal = trial.nodal;
    st.newton_iters += 1;
    st.energy_history.push_back(e1);
    if (have_trial_residual) {
      r = std::move(r_trial);
      res_norm = res_trial;
    } else {
      r = assemble_residual(s, prob.fam, out.u, load, frp, qd);
      res_norm = linf(r);
    }
  }
  st.final_residual = res_norm;
  st.converged = res_norm <= prob.solver.tol;
  return out;
}

}  // namespace pxfem
