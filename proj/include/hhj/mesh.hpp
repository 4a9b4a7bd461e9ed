// Triangulations of polygonal domains, red refinement and the reference meshes
// used by the plate experiments.
//
// Provides:
//  - Triangulation: vertices, CCW cells, canonically oriented edges with frames
//  - refine_uniform: split every cell into four congruent children
//  - initial_mesh: 8x8 base grids for the unit square and the L-shaped domain
//  - a plain-text mesh format with bit-exact round trip

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hhj {

using VertexId = std::size_t;
using CellId = std::size_t;
using EdgeId = std::size_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

using Point2 = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Raised for invalid mesh input (non-conforming, degenerate or clockwise cells).
class MeshError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mesh edge. Endpoints are stored with the smaller id first; the tangent
/// points from the first to the second endpoint and normal = (t.y, -t.x).
struct Edge {
  std::array<VertexId, 2> vertices{};
  Vec2 tangent;
  Vec2 normal;
  double length = 0.0;
  bool boundary = false;
  std::array<CellId, 2> cells{};
  int num_cells = 0;
};

/// Local edge j of a cell is the edge opposite its local vertex j.
/// `sign` is +1 when the edge normal points out of the cell.
struct CellEdge {
  EdgeId edge = 0;
  int sign = 1;
};

class Triangulation {
 public:
  Triangulation() = default;

  /// Builds edges, frames and incidence from raw vertices and CCW cells.
  static Triangulation build(std::vector<Point2> vertices,
                             std::vector<std::array<VertexId, 3>> cells,
                             int level = 1);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_interior_vertices() const { return interior_vertices_.size(); }

  const std::vector<Point2>& vertices() const { return vertices_; }
  const Point2& vertex(VertexId v) const { return vertices_[v]; }
  const std::vector<std::array<VertexId, 3>>& cells() const { return cells_; }
  const std::array<VertexId, 3>& cell(CellId c) const { return cells_[c]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  const std::array<CellEdge, 3>& cell_edges(CellId c) const { return cell_edges_[c]; }
  double area(CellId c) const { return areas_[c]; }

  const std::vector<VertexId>& interior_vertex_ids() const { return interior_vertices_; }
  /// Position of `v` among the interior vertices, or -1 on the boundary.
  long interior_index(VertexId v) const { return interior_index_[v]; }
  bool is_boundary_vertex(VertexId v) const { return interior_index_[v] < 0; }

  /// Edges incident to each vertex, ascending edge id.
  const std::vector<EdgeId>& vertex_edges(VertexId v) const { return vertex_edges_[v]; }

  int level() const { return level_; }

  Point2 centroid(CellId c) const {
    const auto& t = cells_[c];
    return (1.0 / 3.0) * (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]);
  }

  /// Gradients of the three barycentric coordinates of cell c.
  std::array<Vec2, 3> barycentric_gradients(CellId c) const {
    const auto& t = cells_[c];
    const double twice_area = 2.0 * areas_[c];
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
      const Point2& a = vertices_[t[(i + 1) % 3]];
      const Point2& b = vertices_[t[(i + 2) % 3]];
      g[i] = {(a.y - b.y) / twice_area, (b.x - a.x) / twice_area};
    }
    return g;
  }

  double total_area() const {
    double s = 0.0;
    for (double a : areas_) s += a;
    return s;
  }

  /// #cells - #edges + #vertices; equals 1 on simply connected domains.
  long euler_characteristic() const {
    return static_cast<long>(num_cells()) - static_cast<long>(num_edges()) +
           static_cast<long>(num_vertices());
  }

  double max_diameter() const {
    double h = 0.0;
    for (const auto& e : edges_) h = std::max(h, e.length);
    return h;
  }

 private:
  std::vector<Point2> vertices_;
  std::vector<std::array<VertexId, 3>> cells_;
  std::vector<Edge> edges_;
  std::vector<std::array<CellEdge, 3>> cell_edges_;
  std::vector<double> areas_;
  std::vector<VertexId> interior_vertices_;
  std::vector<long> interior_index_;
  std::vector<std::vector<EdgeId>> vertex_edges_;
  int level_ = 1;
};

inline Triangulation Triangulation::build(std::vector<Point2> vertices,
                                          std::vector<std::array<VertexId, 3>> cells,
                                          int level) {
  Triangulation tri;
  tri.level_ = level;
  const std::size_t nv = vertices.size();

  double scale = 0.0;
  for (const auto& p : vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw MeshError("vertex coordinates must be finite");
    scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  }
  scale = std::max(scale, 1.0);

  tri.areas_.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& t = cells[c];
    for (VertexId v : t)
      if (v >= nv) throw MeshError("cell " + std::to_string(c) + " references missing vertex");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshError("cell " + std::to_string(c) + " repeats a vertex");
    const double a2 = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    if (std::abs(a2) <= 1e-14 * scale * scale)
      throw MeshError("cell " + std::to_string(c) + " is degenerate");
    if (a2 < 0.0) throw MeshError("cell " + std::to_string(c) + " is not counterclockwise");
    tri.areas_.push_back(0.5 * a2);
  }

  std::map<std::pair<VertexId, VertexId>, EdgeId> lookup;
  tri.cell_edges_.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& t = cells[c];
    for (int j = 0; j < 3; ++j) {
      const VertexId from = t[(j + 1) % 3];
      const VertexId to = t[(j + 2) % 3];
      const auto key = std::minmax(from, to);
      auto [it, inserted] = lookup.try_emplace({key.first, key.second}, tri.edges_.size());
      if (inserted) {
        Edge e;
        e.vertices = {key.first, key.second};
        const Vec2 d = vertices[key.second] - vertices[key.first];
        e.length = norm(d);
        e.tangent = (1.0 / e.length) * d;
        e.normal = {e.tangent.y, -e.tangent.x};
        tri.edges_.push_back(e);
      }
      Edge& e = tri.edges_[it->second];
      if (e.num_cells == 2)
        throw MeshError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                        ") is shared by more than two cells");
      // CCW traversal direction; the outward normal is its clockwise rotation.
      const Vec2 d = vertices[to] - vertices[from];
      const Vec2 outward{d.y, -d.x};
      const int sign = dot(outward, e.normal) > 0.0 ? 1 : -1;
      if (e.num_cells == 1) {
        const auto& other = tri.cell_edges_[e.cells[0]];
        for (const auto& ce : other)
          if (ce.edge == it->second && ce.sign == sign)
            throw MeshError("cells " + std::to_string(e.cells[0]) + " and " + std::to_string(c) +
                            " overlap across a shared edge");
      }
      e.cells[e.num_cells++] = c;
      tri.cell_edges_[c][j] = {it->second, sign};
    }
  }

  std::vector<char> on_boundary(nv, 0);
  std::vector<char> used(nv, 0);
  for (const auto& t : cells)
    for (VertexId v : t) used[v] = 1;
  for (VertexId v = 0; v < nv; ++v)
    if (!used[v]) throw MeshError("vertex " + std::to_string(v) + " belongs to no cell");

  std::vector<EdgeId> boundary_edges;
  for (EdgeId e = 0; e < tri.edges_.size(); ++e) {
    Edge& edge = tri.edges_[e];
    edge.boundary = edge.num_cells == 1;
    if (edge.boundary) {
      boundary_edges.push_back(e);
      on_boundary[edge.vertices[0]] = on_boundary[edge.vertices[1]] = 1;
    }
  }

  // A hanging node shows up as a boundary-flagged vertex lying strictly inside
  // another boundary-flagged edge.
  std::vector<VertexId> boundary_vertices;
  for (VertexId v = 0; v < nv; ++v)
    if (on_boundary[v]) boundary_vertices.push_back(v);
  for (EdgeId e : boundary_edges) {
    const Edge& edge = tri.edges_[e];
    const Point2 a = vertices[edge.vertices[0]];
    for (VertexId v : boundary_vertices) {
      if (v == edge.vertices[0] || v == edge.vertices[1]) continue;
      const Vec2 d = vertices[v] - a;
      const double along = dot(d, edge.tangent);
      const double off = cross(edge.tangent, d);
      if (along > 1e-12 * edge.length && along < (1.0 - 1e-12) * edge.length &&
          std::abs(off) <= 1e-12 * edge.length)
        throw MeshError("non-conforming mesh: vertex " + std::to_string(v) + " hangs on edge " +
                        std::to_string(e));
    }
  }

  tri.interior_index_.assign(nv, -1);
  for (VertexId v = 0; v < nv; ++v) {
    if (!on_boundary[v]) {
      tri.interior_index_[v] = static_cast<long>(tri.interior_vertices_.size());
      tri.interior_vertices_.push_back(v);
    }
  }

  tri.vertex_edges_.resize(nv);
  for (EdgeId e = 0; e < tri.edges_.size(); ++e)
    for (VertexId v : tri.edges_[e].vertices) tri.vertex_edges_[v].push_back(e);

  tri.vertices_ = std::move(vertices);
  tri.cells_ = std::move(cells);
  return tri;
}

inline Triangulation build_triangulation(std::vector<Point2> vertices,
                                         std::vector<std::array<VertexId, 3>> cells) {
  return Triangulation::build(std::move(vertices), std::move(cells));
}

/// Parent/child bookkeeping of one red refinement step.
struct RefinementMap {
  std::vector<CellId> coarse_cell_of_fine_cell;
  std::vector<VertexId> fine_vertex_of_coarse_edge;
  std::vector<VertexId> coarse_vertex_embedding;
};

inline CellId containing_coarse_cell(const RefinementMap& map, CellId fine_cell) {
  if (fine_cell >= map.coarse_cell_of_fine_cell.size())
    throw std::out_of_range("unknown fine cell " + std::to_string(fine_cell));
  return map.coarse_cell_of_fine_cell[fine_cell];
}

/// Splits every cell at its edge midpoints. Coarse vertices keep their ids;
/// the midpoint of coarse edge e becomes vertex num_vertices + e; the children
/// of coarse cell c are 4c .. 4c+3 (corner children first, centre last).
inline std::pair<Triangulation, RefinementMap> refine_uniform(const Triangulation& coarse) {
  const std::size_t nv = coarse.num_vertices();
  std::vector<Point2> vertices = coarse.vertices();
  vertices.reserve(nv + coarse.num_edges());
  RefinementMap map;
  map.coarse_vertex_embedding.resize(nv);
  for (VertexId v = 0; v < nv; ++v) map.coarse_vertex_embedding[v] = v;
  map.fine_vertex_of_coarse_edge.resize(coarse.num_edges());
  for (EdgeId e = 0; e < coarse.num_edges(); ++e) {
    const auto& ev = coarse.edge(e).vertices;
    map.fine_vertex_of_coarse_edge[e] = vertices.size();
    vertices.push_back(0.5 * (coarse.vertex(ev[0]) + coarse.vertex(ev[1])));
  }

  std::vector<std::array<VertexId, 3>> cells;
  cells.reserve(4 * coarse.num_cells());
  map.coarse_cell_of_fine_cell.reserve(4 * coarse.num_cells());
  for (CellId c = 0; c < coarse.num_cells(); ++c) {
    const auto& t = coarse.cell(c);
    const auto& ce = coarse.cell_edges(c);
    // midpoint opposite local vertex j
    const VertexId m0 = map.fine_vertex_of_coarse_edge[ce[0].edge];
    const VertexId m1 = map.fine_vertex_of_coarse_edge[ce[1].edge];
    const VertexId m2 = map.fine_vertex_of_coarse_edge[ce[2].edge];
    cells.push_back({t[0], m2, m1});
    cells.push_back({m2, t[1], m0});
    cells.push_back({m1, m0, t[2]});
    cells.push_back({m0, m1, m2});
    for (int k = 0; k < 4; ++k) map.coarse_cell_of_fine_cell.push_back(c);
  }
  return {Triangulation::build(std::move(vertices), std::move(cells), coarse.level() + 1),
          std::move(map)};
}

enum class Domain { square, lshape };

inline const char* to_string(Domain d) { return d == Domain::square ? "square" : "lshape"; }

/// Level-1 meshes: an 8x8 grid of squares, each cut along the diagonal from its
/// lower-left to its upper-right corner. The L-shape drops the quadrant
/// (0,1)x(-1,0) of the grid on (-1,1)^2.
inline Triangulation initial_mesh(Domain domain) {
  constexpr int n = 8;
  const double lo = domain == Domain::square ? 0.0 : -1.0;
  const double h = domain == Domain::square ? 1.0 / n : 2.0 / n;
  auto removed = [&](int i, int j) { return domain == Domain::lshape && i >= n / 2 && j < n / 2; };

  std::vector<long> id((n + 1) * (n + 1), -1);
  std::vector<std::array<int, 4>> squares;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (!removed(i, j))
        squares.push_back({j * (n + 1) + i, j * (n + 1) + i + 1, (j + 1) * (n + 1) + i + 1,
                           (j + 1) * (n + 1) + i});
  for (const auto& s : squares)
    for (int g : s) id[g] = 0;

  std::vector<Point2> vertices;
  for (int g = 0; g < (n + 1) * (n + 1); ++g) {
    if (id[g] < 0) continue;
    id[g] = static_cast<long>(vertices.size());
    vertices.push_back({lo + h * (g % (n + 1)), lo + h * (g / (n + 1))});
  }
  std::vector<std::array<VertexId, 3>> cells;
  for (const auto& s : squares) {
    const auto a = static_cast<VertexId>(id[s[0]]), b = static_cast<VertexId>(id[s[1]]),
               c = static_cast<VertexId>(id[s[2]]), d = static_cast<VertexId>(id[s[3]]);
    cells.push_back({a, b, c});
    cells.push_back({a, c, d});
  }
  return Triangulation::build(std::move(vertices), std::move(cells), 1);
}

// Mesh text format: "nv nc", nv lines "x y", nc lines "i j k" (0-based, CCW).

inline void write_mesh(std::ostream& out, const Triangulation& tri) {
  char buf[128];
  out << tri.num_vertices() << ' ' << tri.num_cells() << '\n';
  for (const auto& p : tri.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out << buf;
  }
  for (const auto& t : tri.cells()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline Triangulation read_mesh(std::istream& in) {
  std::size_t nv = 0, nc = 0;
  if (!(in >> nv >> nc)) throw MeshError("mesh file: missing header \"nv nc\"");
  std::vector<Point2> vertices(nv);
  std::string sx, sy;
  for (auto& p : vertices) {
    if (!(in >> sx >> sy)) throw MeshError("mesh file: truncated vertex list");
    try {
      p = {std::stod(sx), std::stod(sy)};
    } catch (const std::exception&) {
      throw MeshError("mesh file: bad coordinate \"" + sx + " " + sy + "\"");
    }
  }
  std::vector<std::array<VertexId, 3>> cells(nc);
  for (auto& t : cells)
    if (!(in >> t[0] >> t[1] >> t[2])) throw MeshError("mesh file: truncated cell list");
  return Triangulation::build(std::move(vertices), std::move(cells));
}

inline Triangulation read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);
  return read_mesh(in);
}

}  // namespace hhj
