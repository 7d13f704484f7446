#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pxfem/exponent.hpp"
#include "pxfem/interp.hpp"
#include "pxfem/mesh.hpp"

using namespace pxfem;

namespace {

ScalarField affine_field(double c, Vec2 g) {
  return {[=](Vec2 x) { return c + g.x * x.x + g.y * x.y; },
          [=](Vec2) { return g; }};
}

ScalarField sine_field() {
  return {[](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); },
          [](Vec2 x) {
            return Vec2{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                        M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
          }};
}

std::vector<Triangulation> refinement_ladder(int n0, int levels) {
  std::vector<Triangulation> meshes;
  meshes.push_back(generate(Domain::UnitSquare, n0));
  for (int r = 1; r < levels; ++r)
    meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

}  // namespace

TEST_CASE("vertex patch projection reproduces affine functions", "[interp]") {
  for (int n : {3, 4}) {
    Triangulation t = generate(Domain::UnitSquare, n);
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, false};
    ScalarField v = affine_field(2.0, {3.0, -5.0});
    FeFunction pv = interpolate(op, v);
    for (int vert = 0; vert < (int)t.vertices.size(); ++vert)
      CHECK(pv.nodal[vert] ==
            Catch::Approx(v.value(t.vertices[vert])).margin(1e-12));
  }
}

TEST_CASE("boundary preserving variant zeroes the Dirichlet trace",
          "[interp]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  Interpolator op{&s, true};
  FeFunction pv = interpolate(op, sine_field());
  CHECK(pv.zero_trace);
  for (int vert = 0; vert < (int)t.vertices.size(); ++vert)
    if (t.vertex_on_boundary[vert]) CHECK(pv.nodal[vert] == 0.0);
  // interior dofs are genuine projections
  double interior_max = 0.0;
  for (int vert = 0; vert < (int)t.vertices.size(); ++vert)
    if (!t.vertex_on_boundary[vert])
      interior_max = std::max(interior_max, std::abs(pv.nodal[vert]));
  CHECK(interior_max > 0.5);
}

TEST_CASE("interpolation of the zero field vanishes", "[interp]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  for (bool preserve : {false, true}) {
    Interpolator op{&s, preserve};
    FeFunction pv = interpolate(op, [](Vec2) { return 0.0; });
    for (double v : pv.nodal) CHECK(v == 0.0);
  }
}

TEST_CASE("interpolation is linear", "[interp]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  auto u = [](Vec2 x) { return std::sin(3.0 * x.x) + x.y * x.y; };
  auto w = [](Vec2 x) { return std::cos(2.0 * x.y) * x.x; };
  double al = 1.7, be = -0.6;
  auto combo = [&](Vec2 x) { return al * u(x) + be * w(x); };
  for (bool preserve : {false, true}) {
    Interpolator op{&s, preserve};
    FeFunction pu = interpolate(op, u);
    FeFunction pw = interpolate(op, w);
    FeFunction pc = interpolate(op, combo);
    for (std::size_t i = 0; i < pc.nodal.size(); ++i)
      CHECK(pc.nodal[i] ==
            Catch::Approx(al * pu.nodal[i] + be * pw.nodal[i]).margin(1e-12));
  }
}

TEST_CASE("patch projection is not a nodal interpolant on hat functions",
          "[interp]") {
  // P1 hat at an interior vertex of the diagonal-split mesh: the affine
  // patch fit has no linear part by central symmetry, so the projected
  // value is mean(hat) = 1/3, not 1.  Nodal-function reproduction fails
  // for this construction; only global polynomial reproduction holds.
  const int n = 4;
  const double spacing = 1.0 / n;
  Vec2 center{0.5, 0.5};
  auto hat = [&](Vec2 x) {
    double u = (x.x - center.x) / spacing, v = (x.y - center.y) / spacing;
    return std::max(0.0, 1.0 - std::max({std::abs(u), std::abs(v),
                                         std::abs(u - v)}));
  };
  Triangulation t = generate(Domain::UnitSquare, n);
  FeSpace s = FeSpace::build(t);
  Interpolator op{&s, false};
  FeFunction ph = interpolate(op, hat);
  int cv = -1;
  for (int vert = 0; vert < (int)t.vertices.size(); ++vert)
    if (t.vertices[vert].x == 0.5 && t.vertices[vert].y == 0.5) cv = vert;
  REQUIRE(cv >= 0);
  CHECK(ph.nodal[cv] == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("mean stability of the preserving variant on structured meshes",
          "[interp]") {
  ScalarField v = sine_field();
  auto meshes = refinement_ladder(4, 4);
  double envelope = 0.0;
  const TriRule& rule = tri_rule_degree4();
  for (const Triangulation& t : meshes) {
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, true};
    FeFunction pv = interpolate(op, v);
    for (int k = 0; k < (int)t.cells.size(); ++k) {
      Tri g = cell_geometry(t, k);
      double h_k = g.diameter();
      double lhs = integrate_tri(g, rule, [&](Vec2 x) {
                     return std::abs(pv.eval(k, x));
                   }) /
                   g.area();
      double area = 0.0, mf = 0.0, mg = 0.0;
      for (int kp : patch(t, k)) {
        Tri gp = cell_geometry(t, kp);
        area += gp.area();
        mf += integrate_tri(gp, rule,
                            [&](Vec2 x) { return std::abs(v.value(x)); });
        mg += integrate_tri(gp, rule,
                            [&](Vec2 x) { return v.grad(x).norm(); });
      }
      envelope = std::max(envelope, lhs / ((mf + h_k * mg) / area));
    }
  }
  CHECK(envelope <= 10.0);
  CHECK(envelope > 0.0);
}

TEST_CASE("stability probe is bounded across levels and shifts", "[interp]") {
  auto meshes = refinement_ladder(4, 4);

  PhiFamily constant2(ExponentField::constant(2.0), 0.0,
                      PhiVariant::Integral);
  PhiFamily variable(ExponentField::sinusoidal(1.6, 1.2), 1e-3,
                     PhiVariant::Integral);
  ScalarField v = sine_field();

  for (const Triangulation& t : meshes) {
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, true};
    FeFunction z = interpolate(op, [](Vec2) { return 0.0; });
    (void)z;
    CHECK(stability_probe(op, constant2,
                          ScalarField{[](Vec2) { return 0.0; },
                                      [](Vec2) { return Vec2{0, 0}; }},
                          0.0, 2.0) == 0.0);
    CHECK(stability_probe(op, constant2, v, 0.0, 2.0) <= 10.0);
    for (double a : {0.0, 0.5, 1.0})
      CHECK(stability_probe(op, variable, v, a, 2.0) <= 10.0);
  }
}

TEST_CASE("approximability probe is bounded and vanishes on affines",
          "[interp]") {
  auto meshes = refinement_ladder(4, 4);
  PhiFamily constant2(ExponentField::constant(2.0), 0.0,
                      PhiVariant::Integral);
  PhiFamily variable(ExponentField::affine(1.7, {1.1, 0.2}), 1e-3,
                     PhiVariant::Integral);
  ScalarField v = sine_field();

  {
    const Triangulation& t = meshes[1];
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, false};
    CHECK(approximability_probe(op, constant2, affine_field(0.4, {1.0, 2.0}),
                                0.0, 2.0) < 1e-12);
  }
  for (const Triangulation& t : meshes) {
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, true};
    CHECK(approximability_probe(op, constant2, v, 0.0, 2.0) <= 10.0);
    for (double a : {0.0, 0.5, 1.0})
      CHECK(approximability_probe(op, variable, v, a, 2.0) <= 10.0);
  }
}

TEST_CASE("probes reject inadmissible fields per cell", "[interp]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  Interpolator op{&s, true};
  PhiFamily fam(ExponentField::constant(2.0), 0.0, PhiVariant::Integral);
  ScalarField huge{[](Vec2) { return 1e7; }, [](Vec2) { return Vec2{0, 0}; }};
  CHECK_THROWS_WITH(stability_probe(op, fam, huge, 0.0, 2.0),
                    Catch::Matchers::ContainsSubstring("cell"));
}
