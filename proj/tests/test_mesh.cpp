#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "pxfem/mesh.hpp"

using namespace pxfem;

namespace {

std::string temp_path(const char* stem) {
  return std::string("./") + stem + ".pxmesh";
}

}  // namespace

TEST_CASE("structured unit square generation", "[mesh]") {
  Triangulation t1 = generate(Domain::UnitSquare, 1);
  CHECK(t1.cells.size() == 2);
  CHECK(t1.vertices.size() == 4);
  CHECK(t1.h == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(t1.level == 0);

  Triangulation t2 = generate(Domain::UnitSquare, 2);
  CHECK(t2.cells.size() == 8);
  CHECK(t2.vertices.size() == 9);
  CHECK(t2.h == Catch::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));

  Triangulation t5 = generate(Domain::UnitSquare, 5);
  CHECK(t5.cells.size() == 50);
  CHECK(t5.vertices.size() == 36);
  // every cell is right isosceles, so gamma0 = 1 + sqrt(2)
  CHECK(t5.gamma0 == Catch::Approx(2.4142135623730950).epsilon(1e-13));
}

TEST_CASE("l-shape generation drops the upper-right quadrant", "[mesh]") {
  Triangulation t = generate(Domain::LShape, 2);
  CHECK(t.cells.size() == 6);
  CHECK(t.vertices.size() == 8);
  // the re-entrant corner is a boundary vertex
  int corner = -1;
  for (int v = 0; v < (int)t.vertices.size(); ++v)
    if (t.vertices[v].x == 0.5 && t.vertices[v].y == 0.5) corner = v;
  REQUIRE(corner >= 0);
  CHECK(t.vertex_on_boundary[corner] == 1);
  CHECK_THROWS_AS(generate(Domain::LShape, 3), PreconditionError);

  double area = 0.0;
  for (int k = 0; k < (int)t.cells.size(); ++k)
    area += cell_geometry(t, k).area();
  CHECK(area == Catch::Approx(0.75).margin(1e-14));
}

TEST_CASE("boundary flags match geometry on the unit square", "[mesh]") {
  Triangulation t = generate(Domain::UnitSquare, 4);
  for (int v = 0; v < (int)t.vertices.size(); ++v) {
    Vec2 x = t.vertices[v];
    bool geo = x.x == 0.0 || x.x == 1.0 || x.y == 0.0 || x.y == 1.0;
    CHECK(bool(t.vertex_on_boundary[v]) == geo);
  }
}

TEST_CASE("red refinement preserves shape and halves h", "[mesh]") {
  Triangulation coarse = generate(Domain::UnitSquare, 1);
  Triangulation fine = refine_uniform(coarse);
  CHECK(fine.cells.size() == 8);
  CHECK(fine.level == 1);
  CHECK(fine.h == Catch::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
  CHECK(fine.gamma0 == Catch::Approx(coarse.gamma0).epsilon(1e-12));

  Triangulation t = generate(Domain::UnitSquare, 2);
  double g0 = t.gamma0;
  double h = t.h;
  for (int r = 0; r < 5; ++r) t = refine_uniform(t);
  CHECK(t.cells.size() == 8u * 1024u);
  CHECK(t.level == 5);
  CHECK(t.gamma0 == Catch::Approx(g0).epsilon(1e-12));
  CHECK(t.h == Catch::Approx(h / 32.0).epsilon(1e-14));
}

TEST_CASE("refinement of an odd mesh keeps gamma0 and the Euler relation",
          "[mesh]") {
  Triangulation t = generate(Domain::UnitSquare, 3);
  double g0 = t.gamma0;
  for (int r = 0; r < 3; ++r) {
    t = refine_uniform(t);  // finalize enforces V - E + F = 1
    CHECK(t.gamma0 == Catch::Approx(g0).epsilon(1e-12));
  }
  CHECK(t.cells.size() == 18u * 64u);

  Triangulation l = generate(Domain::LShape, 4);
  Triangulation lf = refine_uniform(l);
  CHECK(lf.cells.size() == 4 * l.cells.size());
  CHECK(lf.gamma0 == Catch::Approx(l.gamma0).epsilon(1e-12));
}

TEST_CASE("shape metrics on reference triangles", "[mesh]") {
  double s3 = std::sqrt(3.0);
  Triangulation eq = make_triangulation(
      {{0, 0}, {1, 0}, {0.5, 0.5 * s3}}, {{0, 1, 2}});
  ShapeMetrics em = shape_metrics(eq);
  CHECK(em.h == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(em.gamma0 == Catch::Approx(1.7320508075688772).epsilon(1e-12));

  Triangulation ri = make_triangulation({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  ShapeMetrics rm = shape_metrics(ri);
  CHECK(rm.h == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(rm.gamma0 == Catch::Approx(2.4142135623730950).epsilon(1e-12));
}

TEST_CASE("patches are symmetric, reflexive, and bounded by 13", "[mesh]") {
  Triangulation two = generate(Domain::UnitSquare, 1);
  CHECK(patch(two, 0) == std::vector<int>{0, 1});
  CHECK(patch(two, 1) == std::vector<int>{0, 1});

  Triangulation t = generate(Domain::UnitSquare, 8);
  std::size_t max_size = 0, corner_size = 1000;
  for (int k = 0; k < (int)t.cells.size(); ++k) {
    std::vector<int> pk = patch(t, k);
    CHECK(std::binary_search(pk.begin(), pk.end(), k));
    max_size = std::max(max_size, pk.size());
    bool interior = true;
    for (int v : t.cells[k]) interior = interior && !t.vertex_on_boundary[v];
    if (interior) CHECK(pk.size() == 13);
  }
  // corner cell: all three vertices on the boundary
  for (int k = 0; k < (int)t.cells.size(); ++k) {
    Tri g = cell_geometry(t, k);
    Vec2 c = g.centroid();
    if (c.x < 0.25 / 8 * 3 && c.y < 0.25 / 8 * 3) corner_size = patch(t, k).size();
  }
  CHECK(max_size == 13);
  CHECK(corner_size < 13);

  // symmetry on a small mesh
  Triangulation s = generate(Domain::UnitSquare, 4);
  for (int k = 0; k < (int)s.cells.size(); ++k)
    for (int kp : patch(s, k)) {
      std::vector<int> back = patch(s, kp);
      CHECK(std::binary_search(back.begin(), back.end(), k));
    }

  CHECK_THROWS_AS(patch(t, -1), PreconditionError);
  CHECK_THROWS_AS(patch(t, 1 << 20), PreconditionError);
}

TEST_CASE("mesh file round trip is bit exact", "[mesh]") {
  // n = 3 puts non-dyadic coordinates (1/3) through the 17-digit format
  Triangulation t = generate(Domain::UnitSquare, 3);
  std::string path = temp_path("roundtrip");
  write_mesh(t, path);
  Triangulation r = read_mesh(path);
  REQUIRE(r.vertices.size() == t.vertices.size());
  REQUIRE(r.cells.size() == t.cells.size());
  for (std::size_t v = 0; v < t.vertices.size(); ++v) {
    CHECK(r.vertices[v].x == t.vertices[v].x);
    CHECK(r.vertices[v].y == t.vertices[v].y);
    CHECK(r.vertex_on_boundary[v] == t.vertex_on_boundary[v]);
  }
  CHECK(r.cells == t.cells);
  CHECK(r.gamma0 == Catch::Approx(t.gamma0).epsilon(1e-15));
  std::remove(path.c_str());
}

TEST_CASE("mesh parser reports malformed input with line numbers", "[mesh]") {
  auto write_file = [](const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
  };
  std::string path = temp_path("malformed");

  write_file(path, "pxmesh 2\n4 2\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("pxmesh 1"));

  write_file(path, "pxmesh 1\n4 2\n0 0 1\n1 0 1\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("vertex section"));

  write_file(path, "pxmesh 1\n4 2\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0 1 2\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("cell section"));

  write_file(path,
             "pxmesh 1\n4 2\n0 0 1\n1 0 1\n1 1 1\nbad line\n0 1 2\n0 2 3\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("line 6"));

  // inverted orientation in the second cell
  write_file(path,
             "pxmesh 1\n4 2\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n0 1 2\n0 3 2\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("negative area"));

  write_file(path,
             "pxmesh 1\n4 2\n0 0 0\n1 0 1\n1 1 1\n0 1 1\n0 1 2\n0 2 3\n");
  CHECK_THROWS_WITH(read_mesh(path),
                    Catch::Matchers::ContainsSubstring("boundary flags"));
  std::remove(path.c_str());
}

TEST_CASE("conformity violations are rejected", "[mesh]") {
  // duplicated cell: its edges appear twice in the same direction
  CHECK_THROWS_AS(make_triangulation({{0, 0}, {1, 0}, {0, 1}},
                                     {{0, 1, 2}, {0, 1, 2}}),
                  PreconditionError);
  // orphan vertex
  CHECK_THROWS_AS(
      make_triangulation({{0, 0}, {1, 0}, {0, 1}, {5, 5}}, {{0, 1, 2}}),
      PreconditionError);
  // zero-area cell
  CHECK_THROWS_AS(
      make_triangulation({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}),
      PreconditionError);
  CHECK_THROWS_AS(generate(Domain::UnitSquare, 0), PreconditionError);
}
