#pragma once

// Continuous P1 space on a triangulation with Dirichlet bookkeeping, and
// nodal functions with cellwise evaluation.

#include <vector>

#include "pxfem/core.hpp"
#include "pxfem/mesh.hpp"

namespace pxfem {

struct FeSpace {
  const Triangulation* mesh = nullptr;
  int components = 1;
  std::vector<int> free_index;     // vertex -> free dof index, -1 if fixed
  std::vector<int> free_vertices;  // free dof index -> vertex
  int n_free = 0;

  static FeSpace build(const Triangulation& t, int components = 1) {
    if (components != 1)
      throw PreconditionError("only scalar spaces are implemented");
    FeSpace s;
    s.mesh = &t;
    s.components = components;
    s.free_index.assign(t.vertices.size(), -1);
    for (int v = 0; v < static_cast<int>(t.vertices.size()); ++v)
      if (!t.vertex_on_boundary[v]) {
        s.free_index[v] = s.n_free++;
        s.free_vertices.push_back(v);
      }
    return s;
  }

  std::vector<int> dirichlet_dofs() const { return mesh->boundary_vertices(); }
};

struct FeFunction {
  const FeSpace* space = nullptr;
  std::vector<double> nodal;  // one value per mesh vertex
  bool zero_trace = false;

  static FeFunction zero(const FeSpace& s, bool zero_trace = false) {
    FeFunction f;
    f.space = &s;
    f.nodal.assign(s.mesh->vertices.size(), 0.0);
    f.zero_trace = zero_trace;
    return f;
  }

  double eval(int cell, Vec2 x) const {
    const auto& c = space->mesh->cells[cell];
    Tri g = cell_geometry(*space->mesh, cell);
    double inv2a = 1.0 / (2.0 * g.signed_area());
    auto wedge = [](Vec2 u, Vec2 v) { return u.x * v.y - u.y * v.x; };
    double l1 = wedge(x - g.a, g.c - g.a) * inv2a;
    double l2 = wedge(g.b - g.a, x - g.a) * inv2a;
    double l0 = 1.0 - l1 - l2;
    return l0 * nodal[c[0]] + l1 * nodal[c[1]] + l2 * nodal[c[2]];
  }

  Vec2 gradient(int cell) const {
    const auto& c = space->mesh->cells[cell];
    Tri g = cell_geometry(*space->mesh, cell);
    double inv2a = 1.0 / (2.0 * g.signed_area());
    double v0 = nodal[c[0]], v1 = nodal[c[1]], v2 = nodal[c[2]];
    return {((v1 - v0) * (g.c.y - g.a.y) - (v2 - v0) * (g.b.y - g.a.y)) *
                inv2a,
            ((v2 - v0) * (g.b.x - g.a.x) - (v1 - v0) * (g.c.x - g.a.x)) *
                inv2a};
  }
};

}  // namespace pxfem
