#pragma once

// Quasi-norm error metrics, experimental convergence orders, and the
// mesh-refinement study driver.
//
// The distance between an exact gradient and a P1 solution is measured as
//   err^2 = sum_K sum_q w_q |K| |F(x_q, grad v(x_q)) - F(x_q, grad v_h|_K)|^2
// with F(x,xi) = (kappa + |xi|)^((p(x)-2)/2) xi, evaluated with the same
// quadrature rule the assembly uses.  The frozen variant replaces p(x) by
// the cellwise constant exponent of the frozen scheme.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/exponent.hpp"
#include "pxfem/fem.hpp"
#include "pxfem/fespace.hpp"
#include "pxfem/interp.hpp"
#include "pxfem/mesh.hpp"
#include "pxfem/nfunction.hpp"
#include "pxfem/quadrature.hpp"

namespace pxfem {

namespace detail {

inline Vec2 flux_f_vec(const PhiFamily& fam, double p, Vec2 xi) {
  double r = xi.norm();
  if (r == 0.0) return {0.0, 0.0};
  return xi * flux_coef_f(fam, p, r);
}

inline double quasi_norm_error_impl(const PhiFamily& fam, const ScalarField& v,
                                    const FeFunction& v_h,
                                    const FrozenExponent* frozen,
                                    int quad_degree) {
  const FeSpace& s = *v_h.space;
  const Triangulation& t = *s.mesh;
  const TriRule& rule = assembly_rule(quad_degree);
  ExponentSampler ps{&fam.exponent, frozen};
  double acc = 0.0;
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri g = cell_geometry(t, k);
    double area = g.area();
    Vec2 gh = v_h.gradient(k);
    for (const auto& q : rule.points) {
      Vec2 x = g.point(q.u, q.v);
      double p = ps(k, x);
      Vec2 d = flux_f_vec(fam, p, v.grad(x)) - flux_f_vec(fam, p, gh);
      acc += q.w * area * d.norm2();
    }
  }
  return std::sqrt(acc);
}

}  // namespace detail

inline double quasi_norm_error(const PhiFamily& fam, const ScalarField& v,
                               const FeFunction& v_h, int quad_degree = 4) {
  return detail::quasi_norm_error_impl(fam, v, v_h, nullptr, quad_degree);
}

inline double frozen_quasi_norm_error(const PhiFamily& fam,
                                      const FrozenExponent& frozen,
                                      const ScalarField& v,
                                      const FeFunction& v_h,
                                      int quad_degree = 4) {
  return detail::quasi_norm_error_impl(fam, v, v_h, &frozen, quad_degree);
}

// Galerkin error over interpolation error.  The interpolant stands in for
// the (uncomputable) best approximation, so the ratio upper-bounds the
// quasi-best-approximation constant.  A vanishing denominator means the
// interpolant already reproduces v; the ratio is then reported as exact.
struct CeaRatio {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;
};

namespace detail {

inline CeaRatio make_cea(double num, double den) {
  CeaRatio r;
  if (den == 0.0) {
    r.exact = true;
    return r;
  }
  r.value = num / den;
  return r;
}

}  // namespace detail

inline CeaRatio cea_ratio(const PhiFamily& fam, const ScalarField& v,
                          const FeFunction& v_h, const FeFunction& interp_v,
                          int quad_degree = 4) {
  if (v_h.space != interp_v.space)
    throw PreconditionError("cea_ratio needs functions on the same space");
  return detail::make_cea(quasi_norm_error(fam, v, v_h, quad_degree),
                          quasi_norm_error(fam, v, interp_v, quad_degree));
}

// Experimental orders log(e_{k-1}/e_k) / log(h_{k-1}/h_k).  Non-positive
// errors yield a NaN marker in the affected slots.
inline std::vector<double> eoc(const std::vector<double>& errors,
                               const std::vector<double>& hs) {
  if (errors.size() != hs.size())
    throw PreconditionError("eoc needs matching error and h arrays");
  if (errors.size() < 2)
    throw PreconditionError("eoc needs at least two levels");
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (!(hs[i] > 0.0)) throw PreconditionError("eoc needs positive h");
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1]))
      throw PreconditionError("eoc needs strictly decreasing h");
  std::vector<double> rates(errors.size() - 1,
                            std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (!(errors[i - 1] > 0.0) || !(errors[i] > 0.0)) continue;
    rates[i - 1] =
        std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]);
  }
  return rates;
}

// Manufactured solutions used by the benchmark studies.

inline ScalarField sinsin_field() {
  return {[](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); },
          [](Vec2 x) {
            return Vec2{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                        M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
          }};
}

// Singular corner mode on the L-shape: sin(pi x1) sin(pi x2) times
// r^(2/3) sin(2(theta - pi/2)/3) in polar coordinates around (1/2, 1/2),
// theta in [pi/2, 2pi] sweeping the domain between the two re-entrant
// edges.  Zero on the whole boundary; gradient blows up like r^(-1/3).
inline ScalarField lshape_corner_field() {
  auto mode = [](Vec2 x) {
    Vec2 d{x.x - 0.5, x.y - 0.5};
    double r = d.norm();
    double phi = std::atan2(d.y, d.x);
    double theta = phi < 0.5 * M_PI ? phi + 2.0 * M_PI : phi;
    return std::pair<double, double>{r, theta};
  };
  auto value = [mode](Vec2 x) {
    auto [r, theta] = mode(x);
    if (r == 0.0) return 0.0;
    double w = std::pow(r, 2.0 / 3.0) *
               std::sin((2.0 / 3.0) * (theta - 0.5 * M_PI));
    return std::sin(M_PI * x.x) * std::sin(M_PI * x.y) * w;
  };
  auto grad = [mode](Vec2 x) {
    auto [r, theta] = mode(x);
    if (r == 0.0) return Vec2{0.0, 0.0};
    double g = (2.0 / 3.0) * (theta - 0.5 * M_PI);
    double w = std::pow(r, 2.0 / 3.0) * std::sin(g);
    double c = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0);
    Vec2 rhat{std::cos(theta), std::sin(theta)};
    Vec2 that{-rhat.y, rhat.x};
    Vec2 gw = (rhat * std::sin(g) + that * std::cos(g)) * c;
    double s = std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
    Vec2 gs{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
            M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
    return gs * w + gw * s;
  };
  return {value, grad};
}

// Convergence study: levels 0..L of uniform refinement from an n0 x n0 base
// grid, one nonlinear solve per level (two with the frozen scheme), quasi
// norm and interpolation errors, and experimental orders.

struct StudyConfig {
  PhiFamily fam;
  ScalarField v_exact;
  SolverOptions solver;
  Domain domain = Domain::UnitSquare;
  int n0 = 4;
  int levels = 4;
  bool frozen = false;
  std::string exponent_desc;
  double alpha = 1.0;  // reference slope drawn in the plot
};

struct StudyRow {
  int level = 0;
  double h = 0.0;
  int ndof = 0;
  double quasi_err = 0.0;
  double eoc = std::numeric_limits<double>::quiet_NaN();
  double frozen_quasi_err = std::numeric_limits<double>::quiet_NaN();
  double frozen_eoc = std::numeric_limits<double>::quiet_NaN();
  double interp_err = 0.0;
  CeaRatio cea;
  int newton_iters = 0;
};

struct ConvergenceReport {
  std::string exponent_desc;
  double alpha = 1.0;
  double kappa = 0.0;
  Domain domain = Domain::UnitSquare;
  bool frozen = false;
  bool aborted = false;  // solver failure truncated the level loop
  std::vector<StudyRow> rows;
};

inline ConvergenceReport run_study(const StudyConfig& cfg) {
  if (cfg.n0 < 1) throw PreconditionError("study needs a base grid n0 >= 1");
  if (cfg.levels < 0) throw PreconditionError("study needs levels >= 0");

  ConvergenceReport rep;
  rep.exponent_desc = cfg.exponent_desc;
  rep.alpha = cfg.alpha;
  rep.kappa = cfg.fam.kappa;
  rep.domain = cfg.domain;
  rep.frozen = cfg.frozen;

  Problem prob{cfg.fam, RhsKind::Manufactured, {}, cfg.v_exact, cfg.solver};
  const int qd = cfg.solver.quad_degree;

  std::vector<Triangulation> meshes;
  meshes.reserve(cfg.levels + 1);
  meshes.push_back(generate(cfg.domain, cfg.n0));
  for (int l = 1; l <= cfg.levels; ++l)
    meshes.push_back(refine_uniform(meshes.back()));

  for (int l = 0; l <= cfg.levels; ++l) {
    const Triangulation& t = meshes[l];
    FeSpace s = FeSpace::build(t);
    SolveResult res = solve(prob, s);
    if (!res.stats.converged) {
      rep.aborted = true;
      break;
    }

    StudyRow row;
    row.level = l;
    row.h = t.h;
    row.ndof = s.n_free;
    row.newton_iters = res.stats.newton_iters;
    row.quasi_err = quasi_norm_error(cfg.fam, cfg.v_exact, res.u, qd);

    Interpolator op{&s, true};
    FeFunction pv = interpolate(op, cfg.v_exact);
    row.interp_err = quasi_norm_error(cfg.fam, cfg.v_exact, pv, qd);
    row.cea = detail::make_cea(row.quasi_err, row.interp_err);

    if (cfg.frozen) {
      SolveResult fres = solve(prob, s, true);
      if (!fres.stats.converged) {
        rep.aborted = true;
        break;
      }
      FrozenExponent fr = freeze(t, cfg.fam.exponent);
      row.frozen_quasi_err =
          frozen_quasi_norm_error(cfg.fam, fr, cfg.v_exact, fres.u, qd);
    }
    rep.rows.push_back(row);
  }

  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    StudyRow& r1 = rep.rows[i];
    const StudyRow& r0 = rep.rows[i - 1];
    double dh = std::log(r0.h / r1.h);
    if (r0.quasi_err > 0.0 && r1.quasi_err > 0.0)
      r1.eoc = std::log(r0.quasi_err / r1.quasi_err) / dh;
    if (r0.frozen_quasi_err > 0.0 && r1.frozen_quasi_err > 0.0)
      r1.frozen_eoc =
          std::log(r0.frozen_quasi_err / r1.frozen_quasi_err) / dh;
  }
  return rep;
}

// CSV and SVG emission.  Numbers print with %.17g so reruns are comparable
// byte for byte; undefined entries print empty, an exact interpolation
// prints the word exact in the ratio column.

namespace detail {

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_report_csv(const ConvergenceReport& rep,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "level,h,ndof,quasi_err,eoc,frozen_quasi_err,frozen_eoc,"
         "interp_err,cea_ratio,newton_iters\n";
  for (const StudyRow& r : rep.rows) {
    out << r.level << ',' << detail::csv_num(r.h) << ',' << r.ndof << ','
        << detail::csv_num(r.quasi_err) << ',' << detail::csv_num(r.eoc)
        << ',' << detail::csv_num(r.frozen_quasi_err) << ','
        << detail::csv_num(r.frozen_eoc) << ','
        << detail::csv_num(r.interp_err) << ','
        << (r.cea.exact ? std::string("exact") : detail::csv_num(r.cea.value))
        << ',' << r.newton_iters << '\n';
  }
  if (!out) throw std::runtime_error("write failed on " + path);
}

namespace detail {

struct PlotSeries {
  const char* name;
  const char* color;
  std::vector<Vec2> pts;  // (log10 h, log10 err)
};

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

// Log-log error against h with a dashed reference line of slope alpha
// anchored at the finest-level error.
inline void write_report_svg(const ConvergenceReport& rep,
                             const std::string& path) {
  std::vector<detail::PlotSeries> series = {
      {"quasi-norm", "#1f77b4", {}},
      {"frozen", "#d62728", {}},
      {"interpolation", "#2ca02c", {}}};
  for (const StudyRow& r : rep.rows) {
    if (!(r.h > 0.0)) continue;
    double lh = std::log10(r.h);
    if (r.quasi_err > 0.0)
      series[0].pts.push_back({lh, std::log10(r.quasi_err)});
    if (r.frozen_quasi_err > 0.0)
      series[1].pts.push_back({lh, std::log10(r.frozen_quasi_err)});
    if (r.interp_err > 0.0)
      series[2].pts.push_back({lh, std::log10(r.interp_err)});
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  const double width = 640.0, height = 480.0;
  const double ml = 70.0, mr = 20.0, mt = 24.0, mb = 52.0;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (series[0].pts.size() < 2) {
    out << "<text x=\"20\" y=\"40\" font-family=\"sans-serif\">"
           "not enough positive data to plot</text>\n</svg>\n";
    return;
  }

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto grow = [&](Vec2 p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  };
  for (const auto& s : series)
    for (Vec2 p : s.pts) grow(p);

  // reference slope through the finest quasi-norm point
  Vec2 fine = series[0].pts.back();
  Vec2 ref0 = fine;
  Vec2 ref1{series[0].pts.front().x,
            fine.y + rep.alpha * (series[0].pts.front().x - fine.x)};
  grow(ref0);
  grow(ref1);

  double xpad = 0.05 * (xmax - xmin + 1e-12);
  double ypad = 0.05 * (ymax - ymin + 1e-12);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  using detail::svg_num;

  out << "<rect x=\"" << svg_num(ml) << "\" y=\"" << svg_num(mt)
      << "\" width=\"" << svg_num(width - ml - mr) << "\" height=\""
      << svg_num(height - mt - mb)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // x ticks at the data h values, y ticks at integer decades
  for (const StudyRow& r : rep.rows) {
    if (!(r.h > 0.0)) continue;
    double X = px(std::log10(r.h));
    char lab[32];
    std::snprintf(lab, sizeof lab, "%.4g", r.h);
    out << "<line x1=\"" << svg_num(X) << "\" y1=\"" << svg_num(height - mb)
        << "\" x2=\"" << svg_num(X) << "\" y2=\""
        << svg_num(height - mb + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << svg_num(X) << "\" y=\"" << svg_num(height - mb + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << lab << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(ymin));
       d <= static_cast<int>(std::floor(ymax)); ++d) {
    double Y = py(d);
    out << "<line x1=\"" << svg_num(ml - 5) << "\" y1=\"" << svg_num(Y)
        << "\" x2=\"" << svg_num(ml) << "\" y2=\"" << svg_num(Y)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << svg_num(ml - 8) << "\" y=\"" << svg_num(Y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">1e"
        << d << "</text>\n";
  }
  out << "<text x=\"" << svg_num(ml + 0.5 * (width - ml - mr)) << "\" y=\""
      << svg_num(height - 14)
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">h</text>\n"
      << "<text x=\"16\" y=\"" << svg_num(mt + 0.5 * (height - mt - mb))
      << "\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << svg_num(mt + 0.5 * (height - mt - mb)) << ")\">error</text>\n";

  char slope[48];
  std::snprintf(slope, sizeof slope, "slope %g", rep.alpha);
  out << "<line x1=\"" << svg_num(px(ref0.x)) << "\" y1=\""
      << svg_num(py(ref0.y)) << "\" x2=\"" << svg_num(px(ref1.x))
      << "\" y2=\"" << svg_num(py(ref1.y))
      << "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n"
      << "<text x=\"" << svg_num(px(ref1.x) + 6) << "\" y=\""
      << svg_num(py(ref1.y) - 6)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#666666\">"
      << slope << "</text>\n";

  double ly = mt + 14.0;
  for (const auto& s : series) {
    if (s.pts.size() < 2) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (Vec2 p : s.pts)
      out << svg_num(px(p.x)) << ',' << svg_num(py(p.y)) << ' ';
    out << "\"/>\n";
    for (Vec2 p : s.pts)
      out << "<circle cx=\"" << svg_num(px(p.x)) << "\" cy=\""
          << svg_num(py(p.y)) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    out << "<rect x=\"" << svg_num(width - mr - 150) << "\" y=\""
        << svg_num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << s.color << "\"/>\n"
        << "<text x=\"" << svg_num(width - mr - 136) << "\" y=\""
        << svg_num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
        << "</text>\n";
    ly += 16.0;
  }
  if (!rep.exponent_desc.empty())
    out << "<text x=\"" << svg_num(ml) << "\" y=\"" << svg_num(mt - 8)
        << "\" font-family=\"sans-serif\" font-size=\"13\">"
        << rep.exponent_desc << "</text>\n";
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed on " + path);
}

}  // namespace pxfem
