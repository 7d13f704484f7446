#pragma once

// Conforming 2D simplicial triangulations: structured generation on the
// unit square and the L-shape, red (regular) uniform refinement, shape
// metrics, cell neighborhoods, and a small text format.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pxfem/core.hpp"

namespace pxfem {

enum class Domain { UnitSquare, LShape };

struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<char> vertex_on_boundary;
  int level = 0;
  double h = 0.0;
  double gamma0 = 0.0;
  std::vector<std::vector<int>> vertex_cells;  // vertex -> incident cells

  std::vector<int> boundary_vertices() const {
    std::vector<int> out;
    for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
      if (vertex_on_boundary[v]) out.push_back(v);
    return out;
  }
};

inline Tri cell_geometry(const Triangulation& t, int k) {
  if (k < 0 || k >= static_cast<int>(t.cells.size()))
    throw PreconditionError("cell id out of range");
  const auto& c = t.cells[k];
  return Tri{t.vertices[c[0]], t.vertices[c[1]], t.vertices[c[2]]};
}

struct ShapeMetrics {
  double h;
  double gamma0;
};

inline ShapeMetrics shape_metrics(const Triangulation& t) {
  ShapeMetrics m{0.0, 0.0};
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) {
    Tri tri = cell_geometry(t, k);
    double rho = tri.inball_diameter();
    if (!(tri.area() > 0.0) || !(rho > 0.0))
      throw PreconditionError("degenerate cell in shape_metrics");
    m.h = std::max(m.h, tri.diameter());
    m.gamma0 = std::max(m.gamma0, tri.diameter() / rho);
  }
  return m;
}

namespace detail {

// Undirected edge key; direction bookkeeping catches duplicated cells and
// nonmatching orientations.
struct EdgeInfo {
  int count = 0;
  int direction_sum = 0;
};

inline std::map<std::uint64_t, EdgeInfo> edge_table(const Triangulation& t) {
  std::map<std::uint64_t, EdgeInfo> edges;
  for (const auto& c : t.cells)
    for (int e = 0; e < 3; ++e) {
      int u = c[e], v = c[(e + 1) % 3];
      std::uint64_t key =
          (static_cast<std::uint64_t>(std::min(u, v)) << 32) |
          static_cast<std::uint32_t>(std::max(u, v));
      auto& info = edges[key];
      info.count += 1;
      info.direction_sum += (u < v) ? 1 : -1;
    }
  return edges;
}

// Computes adjacency, topological boundary flags, metrics; checks the
// conformity invariants.  Every construction path funnels through here.
inline void finalize(Triangulation& t) {
  const int nv = static_cast<int>(t.vertices.size());
  t.vertex_cells.assign(nv, {});
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k)
    for (int v : t.cells[k]) {
      if (v < 0 || v >= nv)
        throw PreconditionError("cell references vertex out of range");
      t.vertex_cells[v].push_back(k);
    }
  for (int v = 0; v < nv; ++v)
    if (t.vertex_cells[v].empty())
      throw PreconditionError("orphan vertex not used by any cell");
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k)
    if (!(cell_geometry(t, k).signed_area() > 0.0))
      throw PreconditionError("cell " + std::to_string(k) +
                              " has negative area");

  auto edges = edge_table(t);
  std::vector<char> on_boundary(nv, 0);
  for (const auto& [key, info] : edges) {
    if (info.count > 2)
      throw PreconditionError("edge shared by more than two cells");
    if (info.count == 2 && info.direction_sum != 0)
      throw PreconditionError("shared edge traversed twice in one direction");
    if (info.count == 1) {
      on_boundary[static_cast<int>(key >> 32)] = 1;
      on_boundary[static_cast<int>(key & 0xffffffffu)] = 1;
    }
  }
  if (t.vertex_on_boundary.empty()) {
    t.vertex_on_boundary = on_boundary;
  } else if (t.vertex_on_boundary != on_boundary) {
    throw PreconditionError("boundary flags disagree with mesh topology");
  }

  long euler = nv - static_cast<long>(edges.size()) +
               static_cast<long>(t.cells.size());
  if (euler != 1)
    throw PreconditionError("Euler relation V - E + F = 1 violated");

  ShapeMetrics m = shape_metrics(t);
  t.h = m.h;
  t.gamma0 = m.gamma0;
}

}  // namespace detail

inline Triangulation make_triangulation(std::vector<Vec2> vertices,
                                        std::vector<std::array<int, 3>> cells,
                                        int level = 0) {
  Triangulation t;
  t.vertices = std::move(vertices);
  t.cells = std::move(cells);
  t.level = level;
  detail::finalize(t);
  return t;
}

inline Triangulation generate(Domain domain, int n) {
  if (n < 1) throw PreconditionError("generate needs n >= 1");
  if (domain == Domain::LShape && n % 2 != 0)
    throw PreconditionError("l-shape generation needs even n");
  auto grid_index = [n](int i, int j) { return i + j * (n + 1); };
  std::vector<Vec2> grid;
  grid.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      grid.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});

  auto keep_square = [&](int i, int j) {
    if (domain == Domain::UnitSquare) return true;
    return i < n / 2 || j < n / 2;  // drop the upper-right quadrant
  };

  std::vector<std::array<int, 3>> cells;
  std::vector<int> remap(grid.size(), -1);
  std::vector<Vec2> vertices;
  auto use_vertex = [&](int g) {
    if (remap[g] < 0) {
      remap[g] = static_cast<int>(vertices.size());
      vertices.push_back(grid[g]);
    }
    return remap[g];
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!keep_square(i, j)) continue;
      int a = use_vertex(grid_index(i, j));
      int b = use_vertex(grid_index(i + 1, j));
      int c = use_vertex(grid_index(i + 1, j + 1));
      int d = use_vertex(grid_index(i, j + 1));
      cells.push_back({a, b, c});
      cells.push_back({a, c, d});
    }
  return make_triangulation(std::move(vertices), std::move(cells), 0);
}

// Red refinement: each cell into four similar children via edge midpoints.
inline Triangulation refine_uniform(const Triangulation& t) {
  Triangulation fine;
  fine.vertices = t.vertices;
  fine.level = t.level + 1;
  std::map<std::uint64_t, int> midpoint;
  auto mid = [&](int u, int v) {
    std::uint64_t key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) |
                        static_cast<std::uint32_t>(std::max(u, v));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int idx = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back((t.vertices[u] + t.vertices[v]) * 0.5);
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto& c : t.cells) {
    int ab = mid(c[0], c[1]), bc = mid(c[1], c[2]), ca = mid(c[2], c[0]);
    fine.cells.push_back({c[0], ab, ca});
    fine.cells.push_back({ab, c[1], bc});
    fine.cells.push_back({ca, bc, c[2]});
    fine.cells.push_back({ab, bc, ca});
  }
  detail::finalize(fine);
  return fine;
}

// Neighbors N_K: cells sharing at least a vertex with K, including K.
inline std::vector<int> patch(const Triangulation& t, int k) {
  if (k < 0 || k >= static_cast<int>(t.cells.size()))
    throw PreconditionError("cell id out of range");
  std::vector<int> out;
  for (int v : t.cells[k])
    out.insert(out.end(), t.vertex_cells[v].begin(), t.vertex_cells[v].end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void write_mesh(const Triangulation& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "pxmesh 1\n";
  out << t.vertices.size() << ' ' << t.cells.size() << '\n';
  char buf[64];
  for (int v = 0; v < static_cast<int>(t.vertices.size()); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g", t.vertices[v].x,
                  t.vertices[v].y);
    out << buf << ' ' << int(t.vertex_on_boundary[v]) << '\n';
  }
  for (const auto& c : t.cells)
    out << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  if (!out) throw IoError("write to " + path + " failed");
}

inline Triangulation read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  int line_no = 0;
  std::string line;
  auto next_line = [&](const char* section) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return;
    }
    throw IoError(path + ": truncated file, missing " + section);
  };

  next_line("header");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "pxmesh" || version != 1)
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": expected header \"pxmesh 1\"");
  }
  next_line("size line");
  long nv = 0, nc = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> nv >> nc) || nv < 3 || nc < 1)
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": expected vertex and cell counts");
  }
  Triangulation t;
  t.vertices.reserve(nv);
  t.vertex_on_boundary.reserve(nv);
  for (long v = 0; v < nv; ++v) {
    next_line("vertex section");
    std::istringstream ss(line);
    double x, y;
    int flag;
    if (!(ss >> x >> y >> flag) || (flag != 0 && flag != 1))
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": expected \"x y boundary_flag\"");
    t.vertices.push_back({x, y});
    t.vertex_on_boundary.push_back(static_cast<char>(flag));
  }
  for (long c = 0; c < nc; ++c) {
    next_line("cell section");
    std::istringstream ss(line);
    long i, j, k;
    if (!(ss >> i >> j >> k) || i < 0 || j < 0 || k < 0 || i >= nv ||
        j >= nv || k >= nv)
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": expected three vertex indices below " +
                    std::to_string(nv));
    t.cells.push_back({static_cast<int>(i), static_cast<int>(j),
                       static_cast<int>(k)});
  }
  detail::finalize(t);
  return t;
}

}  // namespace pxfem
