// Numerical certificates for the discrete complex
//
//   P1bar --> S_h --symcurl--> V_h --(div div)_h--> P_h --> 0
//
// and for the commuting interpolations I_h, Pi_h, Q_h.

#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include <Eigen/SparseCholesky>

#include "hhj/fem.hpp"

namespace hhj {

struct ExactnessReport {
  std::size_t dim_s = 0;  // 2 #vertices
  std::size_t dim_v = 0;  // #edges
  std::size_t dim_p = 0;  // #interior vertices
  Eigen::Index rank_b = 0;
  Eigen::Index nullity_b = 0;
  Eigen::Index rank_symcurl = 0;

  double complex_residual = 0.0;       // max |B C|
  double surjectivity_residual = 0.0;  // |(div div)_h Pi_h(w_h I) - p| for p = Q_h 1

  bool complex_holds = false;
  bool kernel_matches_range = false;  // nullity(B) = rank(C) = 2V - 3
  bool surjectivity_holds = false;    // rank(B) = dim P_h
  bool euler_identity_holds = false;  // #edges = 2V + V_int - 3

  bool ok() const {
    return complex_holds && kernel_matches_range && surjectivity_holds && euler_identity_holds;
  }
};

inline std::ostream& operator<<(std::ostream& os, const ExactnessReport& r) {
  return os << "dims(S,V,P)=(" << r.dim_s << "," << r.dim_v << "," << r.dim_p << ") rank(B)=" << r.rank_b
            << " nullity(B)=" << r.nullity_b << " rank(symcurl)=" << r.rank_symcurl
            << " |B*symcurl|=" << r.complex_residual << " surjectivity_residual=" << r.surjectivity_residual;
}

inline ExactnessReport check_exactness(const Triangulation& tri, double tol = 1e-12) {
  ExactnessReport r;
  r.dim_s = 2 * tri.num_vertices();
  r.dim_v = tri.num_edges();
  r.dim_p = tri.num_interior_vertices();

  const SparseOperator b = assemble_bform(tri);
  const SparseOperator c = assemble_symcurl(tri);
  r.complex_residual = max_abs(SparseOperator(b * c));
  r.complex_holds = r.complex_residual <= tol;

  r.rank_b = numeric_rank(b);
  r.nullity_b = static_cast<Eigen::Index>(r.dim_v) - r.rank_b;
  r.rank_symcurl = numeric_rank(c);
  const auto expected_kernel = static_cast<Eigen::Index>(r.dim_s) - 3;
  r.kernel_matches_range = r.nullity_b == r.rank_symcurl && r.rank_symcurl == expected_kernel;
  r.surjectivity_holds = r.rank_b == static_cast<Eigen::Index>(r.dim_p);
  r.euler_identity_holds = r.dim_v + 3 == r.dim_s + r.dim_p;

  if (r.dim_p > 0) {
    // Constructive surjectivity: w_h solves (grad w, grad v) = -(p, v), then
    // (div div)_h Pi_h(w_h I) = p.
    using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    const SparseOperator mass = assemble_p1_mass(tri);
    const Eigen::SimplicialLDLT<ColMatrix> mass_solver{ColMatrix(mass)};
    const Eigen::SimplicialLDLT<ColMatrix> stiff_solver{ColMatrix(assemble_p1_stiffness(tri))};
    const Vector p = mass_solver.solve(load_vector(tri, [](Point2) { return 1.0; }).values);
    const Vector w = stiff_solver.solve(Vector(-(mass * p)));
    const Vector sigma_i = assemble_scalar_identity_interp(tri) * w;
    const Vector back = mass_solver.solve(Vector(b * sigma_i));
    r.surjectivity_residual = max_abs(Vector(back - p));
  }
  return r;
}

namespace detail {

inline double monomial(Point2 x, int a, int b) { return std::pow(x.x, a) * std::pow(x.y, b); }

inline Vec2 monomial_gradient(Point2 x, int a, int b) {
  return {a == 0 ? 0.0 : a * std::pow(x.x, a - 1) * std::pow(x.y, b),
          b == 0 ? 0.0 : b * std::pow(x.x, a) * std::pow(x.y, b - 1)};
}

}  // namespace detail

/// max over monomial vector fields phi = x^a y^b e_m with a + b <= degree of
/// |symcurl(I_h phi) - Pi_h(symcurl phi)|_inf.
inline double check_commute_curl(const Triangulation& tri, int degree) {
  if (degree < 0 || degree > 3) throw std::invalid_argument("check_commute_curl: degree must be in [0, 3]");
  const SparseOperator c = assemble_symcurl(tri);
  double worst = 0.0;
  for (int total = 0; total <= degree; ++total)
    for (int a = 0; a <= total; ++a) {
      const int b = total - a;
      for (int m = 0; m < 2; ++m) {
        auto phi = [=](Point2 x) {
          const double v = detail::monomial(x, a, b);
          return m == 0 ? Vec2{v, 0.0} : Vec2{0.0, v};
        };
        auto curl = [=](Point2 x) {
          const Vec2 g = detail::monomial_gradient(x, a, b);
          return m == 0 ? symcurl_from_gradients(g, {}) : symcurl_from_gradients({}, g);
        };
        const Vector lhs = c * interp_i(tri, phi).values;
        const Vector rhs = interp_pi(tri, curl).values;
        worst = std::max(worst, max_abs(Vector(lhs - rhs)));
      }
    }
  return worst;
}

/// b(tau, v_i) for every interior hat v_i of a piecewise smooth tau given
/// with its elementwise divergence: the volume term -int div tau . grad v and
/// the boundary terms of M_nt(tau) d_t v, each integrated with high order.
template <class Tau, class DivTau>
Vector bform_of_field(const Triangulation& tri, const Tau& tau, const DivTau& div_tau) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(tri.num_interior_vertices()));
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto& t = tri.cell(c);
    const auto grads = tri.barycentric_gradients(c);
    const auto& ce = tri.cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      const long row = tri.interior_index(t[i]);
      if (row < 0) continue;
      double val = 0.0;
      for (const auto& q : quadrature::triangle_degree4()) {
        const Point2 x = detail::barycentric_point(tri, c, q.bary);
        const Vec2 d = detail::eval_on(div_tau, c, x);
        val -= tri.area(c) * q.weight * dot(d, grads[i]);
      }
      for (int j = 0; j < 3; ++j) {
        const Edge& f = tri.edge(ce[j].edge);
        const Point2 a = tri.vertex(f.vertices[0]);
        const Point2 b = tri.vertex(f.vertices[1]);
        double mnt = 0.0;
        for (const auto& q : quadrature::gauss4()) {
          const SymTensor2 s = detail::eval_on(tau, c, (1.0 - q.s) * a + q.s * b);
          mnt += q.weight * s.tangent_normal(f.tangent, f.normal);
        }
        val += ce[j].sign * f.length * mnt * dot(grads[i], f.tangent);
      }
      out[row] += val;
    }
  }
  return out;
}

/// max over interior hats v of |b(tau, v) - b(Pi_h tau, v)|.
template <class Tau, class DivTau>
double check_commute_divdiv(const Triangulation& tri, const Tau& tau, const DivTau& div_tau) {
  const Vector exact = bform_of_field(tri, tau, div_tau);
  const Vector discrete = assemble_bform(tri) * interp_pi(tri, tau).values;
  return max_abs(Vector(exact - discrete));
}

/// Same check for a field already in V_h.
inline double check_commute_divdiv(const Triangulation& tri, const StressCoeffs& sigma) {
  auto tau = [&](CellId c, Point2) { return stress_on_cell(tri, sigma, c); };
  auto div = [](CellId, Point2) { return Vec2{}; };
  return check_commute_divdiv(tri, tau, div);
}

struct CommutationReport {
  double curl = 0.0;             // symcurl I_h = Pi_h symcurl, monomials of degree <= 3
  double divdiv_curl = 0.0;      // tau = symcurl of a cubic field
  double divdiv_identity = 0.0;  // tau = w I, w quadratic
  double divdiv_discrete = 0.0;  // tau already in V_h

  double worst() const { return std::max({curl, divdiv_curl, divdiv_identity, divdiv_discrete}); }
};

inline std::ostream& operator<<(std::ostream& os, const CommutationReport& r) {
  return os << "curl=" << r.curl << " divdiv(symcurl cubic)=" << r.divdiv_curl
            << " divdiv(w I)=" << r.divdiv_identity << " divdiv(V_h)=" << r.divdiv_discrete;
}

/// Both squares of the commuting diagram on fixed polynomial inputs.
inline CommutationReport check_commutation(const Triangulation& tri) {
  CommutationReport r;
  r.curl = check_commute_curl(tri, 3);

  // phi = (x^2 y + y^3, x^3 - x y^2 + x y)
  auto grad1 = [](Point2 p) { return Vec2{2 * p.x * p.y, p.x * p.x + 3 * p.y * p.y}; };
  auto grad2 = [](Point2 p) { return Vec2{3 * p.x * p.x - p.y * p.y + p.y, -2 * p.x * p.y + p.x}; };
  auto curl_tau = [&](Point2 p) { return symcurl_from_gradients(grad1(p), grad2(p)); };
  auto curl_div = [](Point2 p) {
    const double phi1_11 = 2 * p.y, phi1_12 = 2 * p.x;
    const double phi2_12 = -2 * p.y + 1.0, phi2_22 = -2 * p.x;
    return Vec2{0.5 * phi1_12 + 0.5 * phi2_22, -0.5 * phi1_11 - 0.5 * phi2_12};
  };
  r.divdiv_curl = check_commute_divdiv(tri, curl_tau, curl_div);

  // w = x^2 - x y + 2 y^2 + x
  auto w_tau = [](Point2 p) {
    const double w = p.x * p.x - p.x * p.y + 2 * p.y * p.y + p.x;
    return w * SymTensor2::identity();
  };
  auto w_div = [](Point2 p) { return Vec2{2 * p.x - p.y + 1.0, -p.x + 4 * p.y}; };
  r.divdiv_identity = check_commute_divdiv(tri, w_tau, w_div);

  Vector v(static_cast<Eigen::Index>(tri.num_edges()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  r.divdiv_discrete = check_commute_divdiv(tri, StressCoeffs{tri.level(), v});
  return r;
}

}  // namespace hhj
