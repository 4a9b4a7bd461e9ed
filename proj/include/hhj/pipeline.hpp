// End-to-end plate solve: source transfer into the momentum equation,
// multigrid for the constrained stress, deflection recovery, manufactured
// solutions and error norms, plus a direct saddle-point solve used as oracle.

#pragma once

#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "hhj/multigrid.hpp"

namespace hhj {

/// Closed-form data of a plate problem with known deflection.
struct ManufacturedCase {
  double nu = 0.0;
  std::function<double(Point2)> u;
  std::function<Vec2(Point2)> grad_u;
  std::function<SymTensor2(Point2)> hessian_u;
  std::function<double(Point2)> f;              // bilaplacian of u
  std::function<SymTensor2(Point2)> sigma;      // -C^{-1} hess u
};

/// u = (x^2 - x)^2 (y^2 - y)^2 on the unit square.
inline ManufacturedCase manufactured_square_case(double nu) {
  check_poisson_ratio(nu);
  struct Poly {
    static double g(double t) { return (t * t - t) * (t * t - t); }
    static double d1(double t) { return 4 * t * t * t - 6 * t * t + 2 * t; }
    static double d2(double t) { return 12 * t * t - 12 * t + 2; }
    static double d4(double) { return 24.0; }
  };
  ManufacturedCase mc;
  mc.nu = nu;
  mc.u = [](Point2 p) { return Poly::g(p.x) * Poly::g(p.y); };
  mc.grad_u = [](Point2 p) {
    return Vec2{Poly::d1(p.x) * Poly::g(p.y), Poly::g(p.x) * Poly::d1(p.y)};
  };
  mc.hessian_u = [](Point2 p) {
    return SymTensor2{Poly::d2(p.x) * Poly::g(p.y), Poly::d1(p.x) * Poly::d1(p.y), Poly::g(p.x) * Poly::d2(p.y)};
  };
  mc.f = [](Point2 p) {
    return Poly::d4(p.x) * Poly::g(p.y) + 2.0 * Poly::d2(p.x) * Poly::d2(p.y) + Poly::g(p.x) * Poly::d4(p.y);
  };
  mc.sigma = [nu, hess = mc.hessian_u](Point2 p) { return -1.0 * c_inverse_apply(hess(p), nu); };
  return mc;
}

struct SourceTransfer {
  ScalarField w;             // (grad w, grad v) = (f, v)
  StressCoeffs offset;       // Pi_h(w I)
  StressDual rhs;            // -M offset
};

/// Moves the load into the first equation: the full stress is
/// sigma_h = sigma_tilde + offset with sigma_tilde in ker B solving
/// a(sigma_tilde, tau) = <rhs, tau> on ker B.
template <class F>
SourceTransfer source_transfer(const Level& level, const F& f) {
  const Triangulation& tri = level.mesh;
  const Vector load = load_vector(tri, f).values;
  Vector w = Vector::Zero(load.size());
  conjugate_gradient(assemble_p1_stiffness(tri), load, w, 1e-12);
  SourceTransfer st;
  st.w = {tri.level(), w};
  st.offset = {tri.level(), assemble_scalar_identity_interp(tri) * w};
  st.rhs = {tri.level(), -(level.mass * st.offset.values)};
  return st;
}

template <class F>
SourceTransfer source_transfer(const Hierarchy& hier, const F& f) {
  return source_transfer(hier.finest(), f);
}

/// u_h from (grad u_h, grad v) = a(sigma_h, Pi_h(v I)) for every interior hat v.
inline ScalarField recover_deflection(const Triangulation& tri, const SparseOperator& mass,
                                      const StressCoeffs& sigma_h) {
  detail::require_size(sigma_h, tri.num_edges(), "recover_deflection");
  const Vector rhs = assemble_scalar_identity_interp(tri).transpose() * (mass * sigma_h.values);
  Vector u = Vector::Zero(rhs.size());
  conjugate_gradient(assemble_p1_stiffness(tri), rhs, u, 1e-12);
  return {tri.level(), std::move(u)};
}

inline ScalarField recover_deflection(const Triangulation& tri, double nu, const StressCoeffs& sigma_h) {
  return recover_deflection(tri, assemble_mass(tri, nu), sigma_h);
}

struct ErrorNorms {
  double stress_l2 = 0.0;
  double deflection_h1 = 0.0;
};

/// ||sigma - sigma_h||_0 and ||u - u_h||_1, degree-4 quadrature per cell.
inline ErrorNorms compute_errors(const Triangulation& tri, const StressCoeffs& sigma_h, const ScalarField& u_h,
                                 const ManufacturedCase& mc) {
  detail::require_size(sigma_h, tri.num_edges(), "compute_errors");
  detail::require_size(u_h, tri.num_interior_vertices(), "compute_errors");
  double es = 0.0, eu = 0.0;
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const SymTensor2 sh = stress_on_cell(tri, sigma_h, c);
    const Vec2 gh = scalar_gradient(tri, u_h, c);
    for (const auto& q : quadrature::triangle_degree4()) {
      const Point2 x = detail::barycentric_point(tri, c, q.bary);
      const double w = tri.area(c) * q.weight;
      const SymTensor2 ds = mc.sigma(x) - sh;
      es += w * ddot(ds, ds);
      const Vec2 dg = mc.grad_u(x) - gh;
      const double du = mc.u(x) - scalar_value(tri, u_h, c, q.bary);
      eu += w * (dot(dg, dg) + du * du);
    }
  }
  return {std::sqrt(es), std::sqrt(eu)};
}

struct PlateSolution {
  StressCoeffs sigma;        // full stress sigma_h
  StressCoeffs sigma_tilde;  // kernel part from multigrid
  ScalarField u;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Transfer, multigrid and recovery on the finest level of `hier`
/// (or on `level` when given).
template <class F>
PlateSolution solve_plate(const Hierarchy& hier, const F& f, const SolveOptions& opts = {},
                          std::optional<int> level = std::nullopt) {
  const Level& l = hier.level(level.value_or(hier.num_levels()));
  const SourceTransfer st = source_transfer(l, f);
  MgResult mg = mg_solve(hier, st.rhs, opts);
  PlateSolution sol;
  sol.sigma_tilde = mg.sigma;
  sol.sigma = {l.mesh.level(), mg.sigma.values + st.offset.values};
  sol.u = recover_deflection(l.mesh, l.mass, sol.sigma);
  sol.iterations = mg.iterations;
  sol.residual_history = std::move(mg.residual_history);
  return sol;
}

struct DirectSolution {
  StressCoeffs sigma;
  ScalarField u;
};

/// Sparse LU of the saddle system [M B^T; B 0][sigma; u] = [0; -F].
template <class F>
DirectSolution direct_saddle_solve(const Triangulation& tri, double nu, const F& f) {
  const SparseOperator m = assemble_mass(tri, nu);
  const SparseOperator b = assemble_bform(tri);
  const auto ne = m.rows();
  const auto np = b.rows();
  std::vector<Eigen::Triplet<double, int>> trips;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(m, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < b.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(b, k); it; ++it) {
      trips.emplace_back(static_cast<int>(ne + it.row()), it.col(), it.value());
      trips.emplace_back(it.col(), static_cast<int>(ne + it.row()), it.value());
    }
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> k(ne + np, ne + np);
  k.setFromTriplets(trips.begin(), trips.end());
  k.makeCompressed();
  Vector rhs = Vector::Zero(ne + np);
  rhs.tail(np) = -load_vector(tri, f).values;
  Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU of the saddle system failed");
  const Vector x = lu.solve(rhs);
  return {{tri.level(), x.head(ne)}, {tri.level(), x.tail(np)}};
}

struct ExperimentConfig {
  Domain domain = Domain::square;
  int levels = 6;
  std::optional<double> nu;  // 0.3 on the square, 0 on the L-shape
  double tol = 1e-8;
  int max_iter = 200;
  int first_level = 3;
  CycleConfig cycle;  // hierarchy default; the rows always report (1,1) and (2,2)
  bool with_errors = true;       // square only
  bool with_contraction = false;
  std::optional<Triangulation> coarse_mesh;  // replaces the built-in level-1 mesh
};

inline double default_nu(Domain d) { return d == Domain::square ? 0.3 : 0.0; }

struct ExperimentRow {
  int level = 0;
  std::size_t size = 0;  // vertices
  double h = 0.0;
  int iters_11 = 0;
  int iters_22 = 0;
  std::optional<ErrorNorms> errors;
  std::optional<double> delta;
};

/// Forcing of each test: the manufactured load on the square, f = 1 on the L-shape.
inline std::function<double(Point2)> experiment_load(Domain d, double nu) {
  if (d == Domain::square) return manufactured_square_case(nu).f;
  return [](Point2) { return 1.0; };
}

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  const double nu = cfg.nu.value_or(default_nu(cfg.domain));
  const Hierarchy hier = build_hierarchy(cfg.coarse_mesh ? *cfg.coarse_mesh : initial_mesh(cfg.domain),
                                         cfg.levels, nu, cfg.cycle.pre, cfg.cycle.post);
  const auto load = experiment_load(cfg.domain, nu);
  const std::optional<ManufacturedCase> mc =
      cfg.domain == Domain::square ? std::optional(manufactured_square_case(nu)) : std::nullopt;
  std::vector<ExperimentRow> rows;
  for (int k = std::min(cfg.first_level, cfg.levels); k <= cfg.levels; ++k) {
    const Level& l = hier.level(k);
    const SourceTransfer st = source_transfer(l, load);
    ExperimentRow row;
    row.level = k;
    row.size = l.mesh.num_vertices();
    row.h = l.mesh.max_diameter();
    const MgResult r11 = mg_solve(hier, st.rhs, {.tol = cfg.tol, .max_iter = cfg.max_iter, .cycle = CycleConfig{1, 1}});
    const MgResult r22 = mg_solve(hier, st.rhs, {.tol = cfg.tol, .max_iter = cfg.max_iter, .cycle = CycleConfig{2, 2}});
    row.iters_11 = r11.iterations;
    row.iters_22 = r22.iterations;
    if (cfg.with_errors && mc) {
      const StressCoeffs sigma{k, r11.sigma.values + st.offset.values};
      const ScalarField u = recover_deflection(l.mesh, l.mass, sigma);
      row.errors = compute_errors(l.mesh, sigma, u, *mc);
    }
    if (cfg.with_contraction) {
      const MgResult ref = mg_solve(hier, st.rhs, {.tol = 1e-11, .max_iter = 400, .cycle = CycleConfig{1, 1}});
      row.delta = estimate_contraction(hier, st.rhs, ref.sigma, CycleConfig{1, 1}).delta;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hhj
