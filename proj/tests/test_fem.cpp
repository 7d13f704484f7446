#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pxfem/fem.hpp"
#include "pxfem/mesh.hpp"

using namespace pxfem;

namespace {

ScalarField sinsin() {
  return {[](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); },
          [](Vec2 x) {
            return Vec2{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                        M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
          }};
}

FeFunction random_zero_trace(const FeSpace& s, Rng& rng, double amp = 1.0) {
  FeFunction u = FeFunction::zero(s, true);
  for (int i = 0; i < s.n_free; ++i)
    u.nodal[s.free_vertices[i]] = uniform(rng, -amp, amp);
  return u;
}

// Dense classical P1 stiffness over the free dofs, assembled from the
// per-cell closed form int grad(l_a).grad(l_b) |K| with edge-vector grads.
std::vector<double> dense_stiffness(const FeSpace& s) {
  const Triangulation& t = *s.mesh;
  int n = s.n_free;
  std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& c : t.cells) {
    Vec2 v[3] = {t.vertices[c[0]], t.vertices[c[1]], t.vertices[c[2]]};
    double twice_area = (v[1].x - v[0].x) * (v[2].y - v[0].y) -
                        (v[1].y - v[0].y) * (v[2].x - v[0].x);
    Vec2 grads[3];
    for (int l = 0; l < 3; ++l) {
      Vec2 e = v[(l + 2) % 3] - v[(l + 1) % 3];  // opposite edge
      grads[l] = Vec2{-e.y, e.x} / twice_area;
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        int fi = s.free_index[c[a]], fj = s.free_index[c[b]];
        if (fi >= 0 && fj >= 0)
          m[static_cast<std::size_t>(fi) * n + fj] +=
              0.5 * twice_area * grads[a].dot(grads[b]);
      }
  }
  return m;
}

}  // namespace

TEST_CASE("residual at p = 2 matches the dense stiffness action", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 5);
  FeSpace s = FeSpace::build(t);
  PhiFamily fam(ExponentField::constant(2.0), 0.3, PhiVariant::Integral);
  Rng rng(7);
  FeFunction u = random_zero_trace(s, rng);
  std::vector<double> load(s.n_free, 0.0);
  std::vector<double> r = assemble_residual(s, fam, u, load);

  std::vector<double> dense = dense_stiffness(s);
  double scale = 0.0, err = 0.0;
  for (int i = 0; i < s.n_free; ++i) {
    double si = 0.0;
    for (int j = 0; j < s.n_free; ++j)
      si += dense[static_cast<std::size_t>(i) * s.n_free + j] *
            u.nodal[s.free_vertices[j]];
    scale = std::max(scale, std::abs(si));
    err = std::max(err, std::abs(si - r[i]));
  }
  CHECK(err <= 1e-12 * scale);
}

TEST_CASE("jacobian at p = 2 is the stiffness matrix for any state", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  PhiFamily fam(ExponentField::constant(2.0), 0.7, PhiVariant::Integral);
  Rng rng(11);
  FeFunction u = random_zero_trace(s, rng);
  CsrMatrix j = assemble_jacobian(s, fam, u);
  std::vector<double> dense = dense_stiffness(s);
  double scale = 0.0;
  for (double v : dense) scale = std::max(scale, std::abs(v));
  for (int a = 0; a < s.n_free; ++a)
    for (int b = 0; b < s.n_free; ++b)
      CHECK(std::abs(j.get(a, b) -
                     dense[static_cast<std::size_t>(a) * s.n_free + b]) <=
            1e-12 * scale);
}

TEST_CASE("jacobian matches directional finite differences", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  PhiFamily fam(ExponentField::sinusoidal(1.6, 1.2), 1e-3,
                PhiVariant::Integral);
  std::vector<double> load(s.n_free, 0.0);
  Rng rng(23);
  const double eps = 1e-6;
  for (int rep = 0; rep < 5; ++rep) {
    FeFunction u = random_zero_trace(s, rng);
    CsrMatrix j = assemble_jacobian(s, fam, u);
    CHECK(j.is_symmetric(1e-12));

    std::vector<double> w(s.n_free);
    for (double& v : w) v = uniform(rng, -1.0, 1.0);
    std::vector<double> jw(s.n_free, 0.0);
    for (int a = 0; a < s.n_free; ++a)
      for (int b = 0; b < s.n_free; ++b) jw[a] += j.get(a, b) * w[b];

    std::vector<double> r0 = assemble_residual(s, fam, u, load);
    FeFunction up = u;
    for (int i = 0; i < s.n_free; ++i)
      up.nodal[s.free_vertices[i]] += eps * w[i];
    std::vector<double> r1 = assemble_residual(s, fam, up, load);
    double scale = 0.0, err = 0.0;
    for (int i = 0; i < s.n_free; ++i) {
      double fd = (r1[i] - r0[i]) / eps;
      scale = std::max(scale, std::abs(jw[i]));
      err = std::max(err, std::abs(fd - jw[i]));
    }
    CHECK(err <= 1e-5 * scale);
  }
}

TEST_CASE("jacobian regularization preconditions", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 2);
  FeSpace s = FeSpace::build(t);
  PhiFamily degenerate(ExponentField::constant(1.5), 0.0,
                       PhiVariant::Integral);
  FeFunction u = FeFunction::zero(s, true);
  CHECK_THROWS_AS(assemble_jacobian(s, degenerate, u, 0.0),
                  PreconditionError);
  CHECK_NOTHROW(assemble_jacobian(s, degenerate, u, 1e-7));
}

TEST_CASE("load assembly is linear and manufactured loads are consistent",
          "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  auto f1 = [](Vec2 x) { return std::sin(3.0 * x.x); };
  auto f2 = [](Vec2 x) { return x.y * x.y - 0.3; };
  std::vector<double> b1 = assemble_load(s, f1);
  std::vector<double> b2 = assemble_load(s, f2);
  std::vector<double> b12 =
      assemble_load(s, [&](Vec2 x) { return f1(x) + f2(x); });
  for (int i = 0; i < s.n_free; ++i)
    CHECK(b12[i] == Catch::Approx(b1[i] + b2[i]).margin(1e-14));

  // v_exact = 0 gives a zero load
  PhiFamily fam(ExponentField::affine(1.8, {0.9, 0.0}), 1e-2,
                PhiVariant::Integral);
  ScalarField zero{[](Vec2) { return 0.0; }, [](Vec2) { return Vec2{0, 0}; }};
  for (double v : manufactured_rhs(s, fam, zero)) CHECK(v == 0.0);

  // at p = 2 the manufactured load is the plain weak gradient load
  PhiFamily p2(ExponentField::constant(2.0), 0.5, PhiVariant::Integral);
  ScalarField v = sinsin();
  std::vector<double> got = manufactured_rhs(s, p2, v);
  const TriRule& rule = tri_rule_degree4();
  for (int i = 0; i < s.n_free; ++i) {
    int vert = s.free_vertices[i];
    double want = 0.0;
    for (int k : t.vertex_cells[vert]) {
      Tri g = cell_geometry(t, k);
      auto hats = detail::hat_gradients(g);
      int local = -1;
      for (int l = 0; l < 3; ++l)
        if (t.cells[k][l] == vert) local = l;
      want += integrate_tri(
          g, rule, [&](Vec2 x) { return v.grad(x).dot(hats[local]); });
    }
    CHECK(got[i] == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("linear problems converge in one Newton step", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 8);
  FeSpace s = FeSpace::build(t);
  Problem prob{PhiFamily(ExponentField::constant(2.0), 0.0,
                         PhiVariant::Integral),
               RhsKind::Manufactured,
               {},
               sinsin(),
               {}};
  SolveResult res = solve(prob, s);
  CHECK(res.stats.converged);
  CHECK(res.stats.newton_iters == 1);
  CHECK(res.stats.final_residual <= 1e-10);
  CHECK(res.u.zero_trace);
  // residual of the discrete solution is below the solver tolerance
  std::vector<double> load = manufactured_rhs(s, prob.fam, prob.v_exact);
  std::vector<double> r = assemble_residual(s, prob.fam, res.u, load);
  double m = 0.0;
  for (double e : r) m = std::max(m, std::abs(e));
  CHECK(m <= 1e-10);
}

TEST_CASE("degenerate nonlinear problem converges with energy descent",
          "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 16);
  FeSpace s = FeSpace::build(t);
  Problem prob{PhiFamily(ExponentField::constant(3.0), 1e-4,
                         PhiVariant::Integral),
               RhsKind::Manufactured,
               {},
               sinsin(),
               {}};
  SolveResult res = solve(prob, s);
  CHECK(res.stats.converged);
  CHECK(res.stats.newton_iters <= 25);
  CHECK(res.stats.final_residual <= 1e-10);
  // energy descends strictly until the decrement reaches rounding noise
  const auto& eh = res.stats.energy_history;
  REQUIRE(eh.size() >= 2);
  for (std::size_t i = 1; i < eh.size(); ++i)
    CHECK(eh[i] < eh[i - 1] + 32.0 * std::numeric_limits<double>::epsilon() *
                                 std::abs(eh[i - 1]));
  CHECK(eh.back() < eh.front());
}

TEST_CASE("singular exponent below two also solves", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 8);
  FeSpace s = FeSpace::build(t);
  Problem prob{PhiFamily(ExponentField::constant(1.5), 1e-4,
                         PhiVariant::Integral),
               RhsKind::Manufactured,
               {},
               sinsin(),
               {}};
  SolveResult res = solve(prob, s);
  CHECK(res.stats.converged);
  CHECK(res.stats.final_residual <= 1e-10);
}

TEST_CASE("freezing a constant exponent changes nothing", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 8);
  FeSpace s = FeSpace::build(t);
  Problem prob{PhiFamily(ExponentField::constant(3.0), 1e-4,
                         PhiVariant::Integral),
               RhsKind::Manufactured,
               {},
               sinsin(),
               {}};
  SolveResult exact = solve(prob, s, false);
  SolveResult frozen = solve(prob, s, true);
  REQUIRE(exact.stats.converged);
  REQUIRE(frozen.stats.converged);
  for (std::size_t i = 0; i < exact.u.nodal.size(); ++i)
    CHECK(frozen.u.nodal[i] == Catch::Approx(exact.u.nodal[i]).margin(1e-12));
}

TEST_CASE("freeze picks the cellwise minimum", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 1);
  ExponentField p = ExponentField::affine(2.0, {1.0, 0.0});
  FrozenExponent fr = freeze(t, p);
  REQUIRE(fr.p_cell.size() == 2);
  CHECK(fr.p_cell[0] == 2.0);  // both cells touch the x = 0 edge
  CHECK(fr.p_cell[1] == 2.0);

  ExponentField c = ExponentField::constant(2.7);
  FrozenExponent frc = freeze(t, c);
  for (double v : frc.p_cell) CHECK(v == 2.7);

  ExponentField s = ExponentField::sinusoidal(1.5, 1.5);
  Triangulation t4 = generate(Domain::UnitSquare, 4);
  FrozenExponent fr4 = freeze(t4, s);
  for (int k = 0; k < (int)t4.cells.size(); ++k) {
    CHECK(fr4.p_cell[k] > 1.0);
    CHECK(fr4.p_cell[k] <= s(fr4.sample_point[k]) + 1e-15);
  }
}

TEST_CASE("discrete operator is monotone", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  FeSpace s = FeSpace::build(t);
  PhiFamily fam(ExponentField::sinusoidal(1.5, 1.5), 1e-3,
                PhiVariant::Integral);
  std::vector<double> load(s.n_free, 0.0);
  Rng rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    FeFunction u = random_zero_trace(s, rng);
    FeFunction w = random_zero_trace(s, rng);
    std::vector<double> ru = assemble_residual(s, fam, u, load);
    std::vector<double> rw = assemble_residual(s, fam, w, load);
    double prod = 0.0;
    for (int i = 0; i < s.n_free; ++i)
      prod += (ru[i] - rw[i]) * (u.nodal[s.free_vertices[i]] -
                                 w.nodal[s.free_vertices[i]]);
    CHECK(prod > 0.0);
  }
}

TEST_CASE("inverse estimate ratio is exactly one for P1", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 6);
  FeSpace s = FeSpace::build(t);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    FeFunction u = random_zero_trace(s, rng);
    CHECK(inverse_estimate_check(s, u) == 1.0);
  }
  CHECK(inverse_estimate_check(s, FeFunction::zero(s, true)) == 1.0);
}

TEST_CASE("modulars under exact and frozen exponents stay comparable",
          "[fem]") {
  ExponentField p = ExponentField::sinusoidal(1.6, 1.2);
  std::vector<Triangulation> meshes;
  meshes.push_back(generate(Domain::UnitSquare, 4));
  for (int r = 0; r < 2; ++r) meshes.push_back(refine_uniform(meshes.back()));
  ScalarField v = sinsin();
  const TriRule& rule = tri_rule_degree4();
  for (const Triangulation& t : meshes) {
    FeSpace s = FeSpace::build(t);
    Interpolator op{&s, true};
    FeFunction vh = interpolate(op, v);
    FrozenExponent fr = freeze(t, p);
    double exact_mod = 0.0, frozen_mod = 0.0;
    for (int k = 0; k < (int)t.cells.size(); ++k) {
      Tri g = cell_geometry(t, k);
      double rn = vh.gradient(k).norm();
      exact_mod += integrate_tri(
          g, rule, [&](Vec2 x) { return std::pow(rn, p(x)); });
      frozen_mod += g.area() * std::pow(rn, fr.p_cell[k]);
    }
    double ratio = exact_mod / frozen_mod;
    CHECK(ratio <= 10.0);
    CHECK(ratio >= 0.1);
  }
}

TEST_CASE("inner linear solvers agree", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 6);
  FeSpace s = FeSpace::build(t);
  PhiFamily fam(ExponentField::constant(2.0), 0.0, PhiVariant::Integral);
  FeFunction u = FeFunction::zero(s, true);
  CsrMatrix j = assemble_jacobian(s, fam, u);
  std::vector<double> b(s.n_free);
  Rng rng(5);
  for (double& v : b) v = uniform(rng, -1.0, 1.0);
  std::vector<double> x_cg, x_dense;
  cg_jacobi(j, b, x_cg, 1e-13);
  dense_cholesky_solve(j, b, x_dense);
  for (int i = 0; i < s.n_free; ++i)
    CHECK(x_cg[i] == Catch::Approx(x_dense[i]).margin(1e-8));
}

TEST_CASE("linear solver failure modes are reported", "[fem]") {
  auto indefinite = CsrMatrix::from_pattern({{0, 1}, {0, 1}});
  indefinite.at(0, 0) = 1.0;
  indefinite.at(0, 1) = 3.0;
  indefinite.at(1, 0) = 3.0;
  indefinite.at(1, 1) = 1.0;  // eigenvalues 4 and -2
  std::vector<double> b{1.0, 2.0}, x;
  CHECK_THROWS_AS(cg_jacobi(indefinite, b, x), SolverError);
  CHECK_THROWS_AS(dense_cholesky_solve(indefinite, b, x), SolverError);
  CHECK_THROWS_AS(indefinite.at(0, 5), PreconditionError);
}

TEST_CASE("solver rejects invalid configuration", "[fem]") {
  Triangulation t = generate(Domain::UnitSquare, 2);
  FeSpace s = FeSpace::build(t);
  Problem bad{PhiFamily(ExponentField::constant(2.0), 0.0,
                        PhiVariant::Integral),
              RhsKind::Manufactured,
              {},
              sinsin(),
              {}};
  bad.solver.tol = 0.0;
  CHECK_THROWS_AS(solve(bad, s), PreconditionError);
  Problem wrong{PhiFamily(ExponentField::constant(2.0), 0.0,
                          PhiVariant::PlainPower),
                RhsKind::Manufactured,
                {},
                sinsin(),
                {}};
  CHECK_THROWS_AS(solve(wrong, s), PreconditionError);
}
