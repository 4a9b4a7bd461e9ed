// Lowest-order HHJ spaces on a triangulation.
//
//  S_h  continuous P1 vector fields (all vertices)      -> VectorField
//  V_h  piecewise constant symmetric tensors with
//       single-valued normal-normal moment per edge      -> StressCoeffs
//  P_h  continuous P1 scalars vanishing on the boundary  -> ScalarField
//
// The V_h basis function of edge e has M_n = 1 on e and M_n = 0 on the other
// edges of each adjacent cell. All operators act on these coefficient vectors.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "hhj/linalg.hpp"
#include "hhj/mesh.hpp"
#include "hhj/quadrature.hpp"
#include "hhj/tensor.hpp"

namespace hhj {

namespace detail {

template <class F>
inline constexpr bool cell_aware_v = std::is_invocable_v<const F&, CellId, Point2>;

/// Evaluates a field given either as f(x) or as f(cell, x).
template <class F>
decltype(auto) eval_on(const F& f, CellId c, Point2 x) {
  if constexpr (cell_aware_v<F>)
    return f(c, x);
  else
    return f(x);
}

template <class FieldT>
void require_size(const FieldT& field, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(field.size()) != n)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) +
                                " coefficients, got " + std::to_string(field.size()));
}

inline Point2 barycentric_point(const Triangulation& tri, CellId c, const std::array<double, 3>& l) {
  const auto& t = tri.cell(c);
  return l[0] * tri.vertex(t[0]) + l[1] * tri.vertex(t[1]) + l[2] * tri.vertex(t[2]);
}

}  // namespace detail

/// The constant symmetric tensor whose normal-normal components on three
/// edges with the given normals are m.
inline SymTensor2 cell_tensor_from_edge_values(const std::array<Vec2, 3>& normals,
                                               const std::array<double, 3>& m) {
  Eigen::Matrix3d a;
  for (int j = 0; j < 3; ++j) {
    const Vec2 n = normals[j];
    a(j, 0) = n.x * n.x;
    a(j, 1) = 2.0 * n.x * n.y;
    a(j, 2) = n.y * n.y;
  }
  // det A = 0 exactly when two normals are parallel
  if (std::abs(a.determinant()) < 1e-12)
    throw std::invalid_argument("cell_tensor_from_edge_values: degenerate triangle");
  const Eigen::Vector3d s = a.partialPivLu().solve(Eigen::Vector3d(m[0], m[1], m[2]));
  return {s(0), s(1), s(2)};
}

inline SymTensor2 cell_tensor_from_edge_values(const Triangulation& tri, CellId c,
                                               const std::array<double, 3>& m) {
  const auto& ce = tri.cell_edges(c);
  return cell_tensor_from_edge_values(
      {tri.edge(ce[0].edge).normal, tri.edge(ce[1].edge).normal, tri.edge(ce[2].edge).normal}, m);
}

/// Restrictions to cell c of the basis functions of its three local edges.
inline std::array<SymTensor2, 3> cell_edge_basis(const Triangulation& tri, CellId c) {
  return {cell_tensor_from_edge_values(tri, c, {1.0, 0.0, 0.0}),
          cell_tensor_from_edge_values(tri, c, {0.0, 1.0, 0.0}),
          cell_tensor_from_edge_values(tri, c, {0.0, 0.0, 1.0})};
}

/// Value on cell c of the V_h field with coefficients sigma.
inline SymTensor2 stress_on_cell(const Triangulation& tri, const StressCoeffs& sigma, CellId c) {
  const auto& ce = tri.cell_edges(c);
  return cell_tensor_from_edge_values(
      tri, c, {sigma.values[ce[0].edge], sigma.values[ce[1].edge], sigma.values[ce[2].edge]});
}

/// Symmetric curl of a vector field with component gradients g1, g2, using the
/// row-wise curl (d2 phi_i, -d1 phi_i).
inline SymTensor2 symcurl_from_gradients(Vec2 g1, Vec2 g2) {
  return {g1.y, 0.5 * (g2.y - g1.x), -g2.x};
}

/// a(sigma, tau) = int C sigma : tau; integrands are constant per cell.
inline SparseOperator assemble_mass(const Triangulation& tri, double nu) {
  check_poisson_ratio(nu);
  std::vector<Triplet> trips;
  trips.reserve(9 * tri.num_cells());
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto basis = cell_edge_basis(tri, c);
    const auto& ce = tri.cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      const SymTensor2 ci = c_apply(basis[i], nu);
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(static_cast<int>(ce[i].edge), static_cast<int>(ce[j].edge),
                           tri.area(c) * ddot(ci, basis[j]));
    }
  }
  const auto n = static_cast<Eigen::Index>(tri.num_edges());
  return from_triplets(n, n, trips);
}

/// b(tau_e, phi_v) for interior hats phi_v (rows) and edge basis tau_e
/// (columns). div_h vanishes for piecewise constants, so only the
/// sum over cell boundaries of M_nt(tau) d_t v survives. M_nt is invariant
/// under (n, t) -> (-n, -t) but d_t v is not: the outward sign enters once.
inline SparseOperator assemble_bform(const Triangulation& tri) {
  std::vector<Triplet> trips;
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto basis = cell_edge_basis(tri, c);
    const auto grads = tri.barycentric_gradients(c);
    const auto& t = tri.cell(c);
    const auto& ce = tri.cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      const long row = tri.interior_index(t[i]);
      if (row < 0) continue;
      for (int e = 0; e < 3; ++e) {
        double val = 0.0;
        for (int j = 0; j < 3; ++j) {
          const Edge& f = tri.edge(ce[j].edge);
          val += ce[j].sign * f.length * basis[e].tangent_normal(f.tangent, f.normal) *
                 dot(grads[i], f.tangent);
        }
        trips.emplace_back(static_cast<int>(row), static_cast<int>(ce[e].edge), val);
      }
    }
  }
  return from_triplets(static_cast<Eigen::Index>(tri.num_interior_vertices()),
                       static_cast<Eigen::Index>(tri.num_edges()), trips);
}

/// P1 Dirichlet stiffness on interior vertices.
inline SparseOperator assemble_p1_stiffness(const Triangulation& tri) {
  std::vector<Triplet> trips;
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto g = tri.barycentric_gradients(c);
    const auto& t = tri.cell(c);
    for (int i = 0; i < 3; ++i) {
      const long r = tri.interior_index(t[i]);
      if (r < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const long s = tri.interior_index(t[j]);
        if (s < 0) continue;
        trips.emplace_back(static_cast<int>(r), static_cast<int>(s), tri.area(c) * dot(g[i], g[j]));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(tri.num_interior_vertices());
  return from_triplets(n, n, trips);
}

/// P1 mass on interior vertices: area/12 * (1 + delta_ij).
inline SparseOperator assemble_p1_mass(const Triangulation& tri) {
  std::vector<Triplet> trips;
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto& t = tri.cell(c);
    for (int i = 0; i < 3; ++i) {
      const long r = tri.interior_index(t[i]);
      if (r < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const long s = tri.interior_index(t[j]);
        if (s < 0) continue;
        trips.emplace_back(static_cast<int>(r), static_cast<int>(s),
                           tri.area(c) * (i == j ? 2.0 : 1.0) / 12.0);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(tri.num_interior_vertices());
  return from_triplets(n, n, trips);
}

/// int f phi_v for each interior hat, degree-4 quadrature per cell.
template <class F>
ScalarDual load_vector(const Triangulation& tri, const F& f) {
  Vector load = Vector::Zero(static_cast<Eigen::Index>(tri.num_interior_vertices()));
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto& t = tri.cell(c);
    for (const auto& q : quadrature::triangle_degree4()) {
      const double fx = static_cast<double>(detail::eval_on(f, c, detail::barycentric_point(tri, c, q.bary)));
      for (int i = 0; i < 3; ++i) {
        const long r = tri.interior_index(t[i]);
        if (r >= 0) load[r] += tri.area(c) * q.weight * fx * q.bary[i];
      }
    }
  }
  return {tri.level(), std::move(load)};
}

/// Matrix of phi -> symcurl(phi) from S_h coefficients to V_h coefficients.
/// The edge coefficient n_e^T (symcurl phi) n_e is computed from every
/// adjacent cell; any disagreement beyond round-off is a logic error.
inline SparseOperator assemble_symcurl(const Triangulation& tri) {
  std::vector<Triplet> trips;
  trips.reserve(4 * tri.num_edges());
  for (EdgeId e = 0; e < tri.num_edges(); ++e) {
    const Edge& edge = tri.edge(e);
    for (VertexId w : edge.vertices) {
      for (int m = 0; m < 2; ++m) {
        double value = 0.0;
        for (int k = 0; k < edge.num_cells; ++k) {
          const CellId c = edge.cells[k];
          const auto& t = tri.cell(c);
          const auto g = tri.barycentric_gradients(c);
          const int local = t[0] == w ? 0 : (t[1] == w ? 1 : 2);
          const Vec2 zero{};
          const SymTensor2 s = m == 0 ? symcurl_from_gradients(g[local], zero)
                                      : symcurl_from_gradients(zero, g[local]);
          const double v = s.normal_normal(edge.normal);
          if (k == 0) {
            value = v;
          } else if (std::abs(v - value) > 1e-12 * std::max(1.0, std::abs(value))) {
            throw std::logic_error("assemble_symcurl: normal-normal moment differs across edge " +
                                   std::to_string(e));
          }
        }
        trips.emplace_back(static_cast<int>(e), static_cast<int>(2 * w + m), value);
      }
    }
  }
  return from_triplets(static_cast<Eigen::Index>(tri.num_edges()),
                       static_cast<Eigen::Index>(2 * tri.num_vertices()), trips);
}

inline StressCoeffs apply_symcurl(const Triangulation& tri, const SparseOperator& symcurl,
                                  const VectorField& phi) {
  detail::require_size(phi, 2 * tri.num_vertices(), "apply_symcurl");
  return {tri.level(), symcurl * phi.values};
}

/// Edge means of M_{n_e}(tau), 2-point Gauss per edge. `tau` is tau(x) or
/// tau(cell, x); cell-aware fields are sampled from the first adjacent cell.
template <class F>
StressCoeffs interp_pi(const Triangulation& tri, const F& tau) {
  Vector out(static_cast<Eigen::Index>(tri.num_edges()));
  for (EdgeId e = 0; e < tri.num_edges(); ++e) {
    const Edge& edge = tri.edge(e);
    const Point2 a = tri.vertex(edge.vertices[0]);
    const Point2 b = tri.vertex(edge.vertices[1]);
    double s = 0.0;
    for (const auto& q : quadrature::gauss2()) {
      const Point2 x = (1.0 - q.s) * a + q.s * b;
      const SymTensor2 t = detail::eval_on(tau, edge.cells[0], x);
      s += q.weight * t.normal_normal(edge.normal);
    }
    out[static_cast<Eigen::Index>(e)] = s;
  }
  return {tri.level(), std::move(out)};
}

/// Vertex interpolation of a vector field phi(x) -> Vec2.
template <class F>
VectorField interp_i(const Triangulation& tri, const F& phi) {
  Vector out(static_cast<Eigen::Index>(2 * tri.num_vertices()));
  for (VertexId v = 0; v < tri.num_vertices(); ++v) {
    const Vec2 p = phi(tri.vertex(v));
    out[2 * v] = p.x;
    out[2 * v + 1] = p.y;
  }
  return {tri.level(), std::move(out)};
}

/// Vertex interpolation of a scalar function into P_h (interior vertices only).
template <class F>
ScalarField interp_scalar(const Triangulation& tri, const F& v) {
  Vector out(static_cast<Eigen::Index>(tri.num_interior_vertices()));
  for (std::size_t i = 0; i < tri.num_interior_vertices(); ++i)
    out[static_cast<Eigen::Index>(i)] = v(tri.vertex(tri.interior_vertex_ids()[i]));
  return {tri.level(), std::move(out)};
}

/// Value of a P_h field at barycentric coordinates of a cell.
inline double scalar_value(const Triangulation& tri, const ScalarField& u, CellId c,
                           const std::array<double, 3>& bary) {
  const auto& t = tri.cell(c);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const long k = tri.interior_index(t[i]);
    if (k >= 0) s += bary[i] * u.values[k];
  }
  return s;
}

inline Vec2 scalar_gradient(const Triangulation& tri, const ScalarField& u, CellId c) {
  const auto& t = tri.cell(c);
  const auto g = tri.barycentric_gradients(c);
  Vec2 s;
  for (int i = 0; i < 3; ++i) {
    const long k = tri.interior_index(t[i]);
    if (k >= 0) s = s + u.values[k] * g[i];
  }
  return s;
}

/// Solves (P1 mass) q = rhs.
inline ScalarField solve_p1_mass(const Triangulation& tri, const SparseOperator& mass,
                                 const Vector& rhs, double rtol = 1e-13) {
  Vector q = Vector::Zero(rhs.size());
  conjugate_gradient(mass, rhs, q, rtol);
  return {tri.level(), std::move(q)};
}

/// L2 projection onto P_h.
template <class F>
ScalarField project_q(const Triangulation& tri, const F& v) {
  return solve_p1_mass(tri, assemble_p1_mass(tri), load_vector(tri, v).values);
}

/// (div div)_h sigma = (P1 mass)^{-1} B sigma.
inline ScalarField divdiv_h_apply(const Triangulation& tri, const StressCoeffs& sigma) {
  detail::require_size(sigma, tri.num_edges(), "divdiv_h_apply");
  return solve_p1_mass(tri, assemble_p1_mass(tri), assemble_bform(tri) * sigma.values);
}

/// Pi_h(v I) for v in P_h: M_n(v I) = v, so each edge gets the mean of v,
/// i.e. half the value at each interior endpoint. Rows edges, columns P_h.
inline SparseOperator assemble_scalar_identity_interp(const Triangulation& tri) {
  std::vector<Triplet> trips;
  for (EdgeId e = 0; e < tri.num_edges(); ++e)
    for (VertexId v : tri.edge(e).vertices) {
      const long k = tri.interior_index(v);
      if (k >= 0) trips.emplace_back(static_cast<int>(e), static_cast<int>(k), 0.5);
    }
  return from_triplets(static_cast<Eigen::Index>(tri.num_edges()),
                       static_cast<Eigen::Index>(tri.num_interior_vertices()), trips);
}

}  // namespace hhj
