#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hhj/mesh.hpp"
#include "hhj/tensor.hpp"

using namespace hhj;

namespace {

Triangulation unit_square_two_cells() {
  return build_triangulation({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

Triangulation reference_triangle() { return build_triangulation({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}); }

long interior_count_by_position(const Triangulation& tri, double lo, double hi) {
  long n = 0;
  for (const auto& p : tri.vertices())
    if (p.x > lo + 1e-12 && p.x < hi - 1e-12 && p.y > lo + 1e-12 && p.y < hi - 1e-12) ++n;
  return n;
}

}  // namespace

TEST(Build, TwoCellSquareCounts) {
  const auto tri = unit_square_two_cells();
  EXPECT_EQ(tri.num_edges(), 5u);
  EXPECT_EQ(tri.num_interior_vertices(), 0u);
  EXPECT_EQ(tri.euler_characteristic(), 1);
}

TEST(Build, ReferenceTriangleHypotenuseNormal) {
  const auto tri = reference_triangle();
  bool found = false;
  for (const auto& e : tri.edges()) {
    if (e.vertices[0] == 1 && e.vertices[1] == 2) {
      found = true;
      const double r = 1.0 / std::sqrt(2.0);
      EXPECT_NEAR(std::abs(e.normal.x), r, 1e-15);
      EXPECT_NEAR(std::abs(e.normal.y), r, 1e-15);
      EXPECT_GT(e.normal.x * e.normal.y, 0.0);
      EXPECT_NEAR(e.length, std::sqrt(2.0), 1e-15);
    }
  }
  EXPECT_TRUE(found);
}

TEST(Build, EdgeFramesAndFlags) {
  const auto tri = refine_uniform(initial_mesh(Domain::lshape)).first;
  for (const auto& e : tri.edges()) {
    EXPECT_LT(e.vertices[0], e.vertices[1]);
    EXPECT_NEAR(norm(e.tangent), 1.0, 1e-14);
    EXPECT_NEAR(norm(e.normal), 1.0, 1e-14);
    EXPECT_NEAR(dot(e.tangent, e.normal), 0.0, 1e-14);
    EXPECT_EQ(e.normal.x, e.tangent.y);
    EXPECT_EQ(e.normal.y, -e.tangent.x);
    EXPECT_EQ(e.boundary, e.num_cells == 1);
    const Vec2 d = tri.vertex(e.vertices[1]) - tri.vertex(e.vertices[0]);
    EXPECT_NEAR(norm(d), e.length, 1e-14);
  }
  for (CellId c = 0; c < tri.num_cells(); ++c) EXPECT_GT(tri.area(c), 0.0);
}

TEST(Build, CellEdgeSignsPointOutward) {
  const auto tri = initial_mesh(Domain::square);
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const Point2 g = tri.centroid(c);
    for (const auto& ce : tri.cell_edges(c)) {
      const Edge& e = tri.edge(ce.edge);
      const Point2 mid = 0.5 * (tri.vertex(e.vertices[0]) + tri.vertex(e.vertices[1]));
      EXPECT_GT(ce.sign * dot(mid - g, e.normal), 0.0);
    }
  }
}

TEST(Build, RejectsBadInput) {
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}), MeshError);  // clockwise
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), MeshError);  // zero area
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 3}}), MeshError);  // bad id
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 1}}), MeshError);
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {0, NAN}}, {{0, 1, 2}}), MeshError);
  // hanging node: vertex 4 sits on the middle of edge (0,2) of the left cell
  EXPECT_THROW(build_triangulation({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}},
                                   {{0, 1, 4}, {1, 2, 4}, {0, 2, 3}}),
               MeshError);
}

TEST(InitialMesh, VertexCountsPerLevel) {
  auto square = initial_mesh(Domain::square);
  EXPECT_EQ(square.num_vertices(), 81u);
  square = refine_uniform(refine_uniform(square).first).first;
  EXPECT_EQ(square.num_vertices(), 1089u);
  EXPECT_EQ(refine_uniform(square).first.num_vertices(), 4225u);

  auto lshape = initial_mesh(Domain::lshape);
  EXPECT_EQ(lshape.num_vertices(), 65u);
  lshape = refine_uniform(refine_uniform(lshape).first).first;
  EXPECT_EQ(lshape.num_vertices(), 833u);
}

TEST(InitialMesh, GeometryOfDomains) {
  const auto square = initial_mesh(Domain::square);
  EXPECT_NEAR(square.total_area(), 1.0, 1e-14);
  EXPECT_EQ(static_cast<long>(square.num_interior_vertices()), interior_count_by_position(square, 0, 1));
  const auto lshape = initial_mesh(Domain::lshape);
  EXPECT_NEAR(lshape.total_area(), 3.0, 1e-14);
  for (const auto& p : lshape.vertices()) EXPECT_FALSE(p.x > 1e-12 && p.y < -1e-12);
  // interior vertices: 7x7 grid of (-1,1)^2 minus those with x >= 0, y <= 0 (4x4)
  EXPECT_EQ(lshape.num_interior_vertices(), 49u - 16u);
}

TEST(Refine, TwoCellSquare) {
  const auto [fine, map] = refine_uniform(unit_square_two_cells());
  EXPECT_EQ(fine.num_cells(), 8u);
  EXPECT_EQ(fine.num_vertices(), 9u);
  EXPECT_EQ(fine.num_edges(), 16u);
  EXPECT_EQ(fine.euler_characteristic(), 1);
  EXPECT_EQ(fine.level(), 2);
  EXPECT_EQ(map.fine_vertex_of_coarse_edge.size(), 5u);
  EXPECT_EQ(map.coarse_vertex_embedding.size(), 4u);
}

TEST(Refine, ReferenceTriangle) {
  const auto [fine, map] = refine_uniform(reference_triangle());
  EXPECT_EQ(fine.num_cells(), 4u);
  EXPECT_EQ(fine.num_vertices(), 6u);
  EXPECT_EQ(fine.num_edges(), 9u);
  for (CellId c = 0; c < 4; ++c) EXPECT_NEAR(fine.area(c), 0.125, 1e-15);
}

TEST(Refine, MidpointsAndEmbedding) {
  const auto coarse = initial_mesh(Domain::lshape);
  const auto [fine, map] = refine_uniform(coarse);
  for (VertexId v = 0; v < coarse.num_vertices(); ++v)
    EXPECT_EQ(fine.vertex(map.coarse_vertex_embedding[v]), coarse.vertex(v));
  for (EdgeId e = 0; e < coarse.num_edges(); ++e) {
    const auto& ce = coarse.edge(e);
    const Point2 mid = 0.5 * (coarse.vertex(ce.vertices[0]) + coarse.vertex(ce.vertices[1]));
    const Point2 got = fine.vertex(map.fine_vertex_of_coarse_edge[e]);
    EXPECT_NEAR(got.x, mid.x, 1e-15);
    EXPECT_NEAR(got.y, mid.y, 1e-15);
  }
}

TEST(Refine, ChildrenLieInParentWithQuarterArea) {
  const auto coarse = initial_mesh(Domain::square);
  const auto [fine, map] = refine_uniform(coarse);
  std::vector<int> children(coarse.num_cells(), 0);
  for (CellId f = 0; f < fine.num_cells(); ++f) {
    const CellId c = containing_coarse_cell(map, f);
    ++children[c];
    EXPECT_NEAR(fine.area(f), 0.25 * coarse.area(c), 1e-16);
    // centroid of the child has positive barycentric coordinates in the parent
    const Point2 g = fine.centroid(f);
    const auto grads = coarse.barycentric_gradients(c);
    const auto& t = coarse.cell(c);
    for (int i = 0; i < 3; ++i) {
      const Point2 opp = coarse.vertex(t[(i + 1) % 3]);
      EXPECT_GT(dot(grads[i], g - opp), 0.0);
    }
  }
  for (int n : children) EXPECT_EQ(n, 4);
}

TEST(Refine, GrandparentByComposition) {
  const auto [m2, map12] = refine_uniform(unit_square_two_cells());
  const auto [m3, map23] = refine_uniform(m2);
  for (CellId f = 0; f < m3.num_cells(); ++f) {
    const CellId grand = containing_coarse_cell(map12, containing_coarse_cell(map23, f));
    EXPECT_EQ(grand, f / 16);
  }
  EXPECT_THROW(containing_coarse_cell(map23, static_cast<CellId>(m3.num_cells())), std::out_of_range);
}

TEST(Refine, TwoCellChildrenSplitIntoTwoGroupsOfFour) {
  const auto [fine, map] = refine_uniform(unit_square_two_cells());
  int count[2] = {0, 0};
  for (CellId f = 0; f < fine.num_cells(); ++f) ++count[containing_coarse_cell(map, f)];
  EXPECT_EQ(count[0], 4);
  EXPECT_EQ(count[1], 4);
}

TEST(Invariants, EdgeCountIdentityAndAreaUnderRefinement) {
  for (Domain d : {Domain::square, Domain::lshape}) {
    Triangulation tri = initial_mesh(d);
    const double area = tri.total_area();
    for (int k = 1; k <= 4; ++k) {
      EXPECT_EQ(tri.num_edges() + 3, 2 * tri.num_vertices() + tri.num_interior_vertices());
      EXPECT_EQ(tri.euler_characteristic(), 1);
      EXPECT_NEAR(tri.total_area(), area, 1e-12 * area);
      tri = refine_uniform(tri).first;
    }
  }
}

TEST(Invariants, NormalNormalIgnoresNormalSign) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const SymTensor2 t{u(gen), u(gen), u(gen)};
    const double a = u(gen);
    const Vec2 n{std::cos(a), std::sin(a)};
    EXPECT_NEAR(t.normal_normal(n), t.normal_normal(-1.0 * n), 1e-15);
  }
}

TEST(MeshFile, RoundTripIsBitExact) {
  Triangulation tri = initial_mesh(Domain::lshape);
  tri = refine_uniform(tri).first;
  std::stringstream ss;
  write_mesh(ss, tri);
  const auto back = read_mesh(ss);
  ASSERT_EQ(back.num_vertices(), tri.num_vertices());
  ASSERT_EQ(back.num_cells(), tri.num_cells());
  for (VertexId v = 0; v < tri.num_vertices(); ++v) EXPECT_EQ(back.vertex(v), tri.vertex(v));
  for (CellId c = 0; c < tri.num_cells(); ++c) EXPECT_EQ(back.cell(c), tri.cell(c));
  std::stringstream again;
  write_mesh(again, back);
  std::stringstream first;
  write_mesh(first, tri);
  EXPECT_EQ(again.str(), first.str());
}

TEST(MeshFile, MalformedInput) {
  std::stringstream truncated("3 1\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(truncated), MeshError);
  std::stringstream garbage("3 1\n0 0\n1 x\n0 1\n0 1 2\n");
  EXPECT_THROW(read_mesh(garbage), MeshError);
  EXPECT_THROW(read_mesh_file("/nonexistent/mesh.txt"), MeshError);
}
