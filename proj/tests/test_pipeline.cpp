#include <gtest/gtest.h>

#include <random>

#include "hhj/pipeline.hpp"

using namespace hhj;

namespace {

const Hierarchy& square3() {
  static const Hierarchy h = build_hierarchy(Domain::square, 3, 0.3);
  return h;
}

double divdiv_fd(const std::function<SymTensor2(Point2)>& s, Point2 p, double h) {
  auto at = [&](double dx, double dy) { return s({p.x + dx, p.y + dy}); };
  const double sxx = (at(h, 0).a11 - 2 * at(0, 0).a11 + at(-h, 0).a11) / (h * h);
  const double syy = (at(0, h).a22 - 2 * at(0, 0).a22 + at(0, -h).a22) / (h * h);
  const double sxy = (at(h, h).a12 - at(h, -h).a12 - at(-h, h).a12 + at(-h, -h).a12) / (4 * h * h);
  return sxx + 2 * sxy + syy;
}

double l2_dot(const Triangulation& tri, const std::function<double(Point2)>& f, const ScalarField& u) {
  double s = 0.0;
  for (CellId c = 0; c < tri.num_cells(); ++c)
    for (const auto& q : quadrature::triangle_degree4())
      s += tri.area(c) * q.weight * f(detail::barycentric_point(tri, c, q.bary)) * scalar_value(tri, u, c, q.bary);
  return s;
}

}  // namespace

TEST(Manufactured, PointValues) {
  const auto mc = manufactured_square_case(0.3);
  EXPECT_NEAR(mc.f({0.5, 0.5}), 5.0, 1e-14);
  const SymTensor2 s = mc.sigma({0.5, 0.5});
  EXPECT_NEAR(s.a11, 0.08125, 1e-15);
  EXPECT_NEAR(s.a22, 0.08125, 1e-15);
  EXPECT_NEAR(s.a12, 0.0, 1e-15);
  EXPECT_THROW(manufactured_square_case(0.5), std::invalid_argument);
}

TEST(Manufactured, EquilibriumAndClampedBoundary) {
  for (double nu : {0.0, 0.3}) {
    const auto mc = manufactured_square_case(nu);
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int i = 0; i < 20; ++i) {
      const Point2 p{u(gen), u(gen)};
      EXPECT_NEAR(divdiv_fd(mc.sigma, p, 1e-3), -mc.f(p), 1e-4 * (1 + std::abs(mc.f(p))));
      // the gradient and hessian are consistent with u
      const double h = 1e-6;
      EXPECT_NEAR(mc.grad_u(p).x, (mc.u({p.x + h, p.y}) - mc.u({p.x - h, p.y})) / (2 * h), 1e-8);
      EXPECT_NEAR(mc.hessian_u(p).a12, (mc.grad_u({p.x, p.y + h}).x - mc.grad_u({p.x, p.y - h}).x) / (2 * h), 1e-7);
    }
    for (double t : {0.0, 0.25, 0.7, 1.0})
      for (Point2 b : {Point2{t, 0}, Point2{t, 1}, Point2{0, t}, Point2{1, t}}) {
        EXPECT_EQ(mc.u(b), 0.0);
        EXPECT_EQ(mc.grad_u(b).x, 0.0);
        EXPECT_EQ(mc.grad_u(b).y, 0.0);
      }
  }
}

TEST(SourceTransfer, ZeroLoadAndBalance) {
  const Level& l = square3().finest();
  const auto zero = source_transfer(l, [](Point2) { return 0.0; });
  EXPECT_EQ(max_abs(zero.rhs.values), 0.0);
  EXPECT_EQ(max_abs(zero.offset.values), 0.0);

  const auto f = [](Point2 p) { return 1.0 + p.x * p.y; };
  const auto st = source_transfer(l, f);
  const Vector load = load_vector(l.mesh, f).values;
  EXPECT_LE(max_abs(Vector(l.bform * st.offset.values + load)), 1e-11 * max_abs(load));
  EXPECT_LE(max_abs(Vector(st.rhs.values + l.mass * st.offset.values)), 0.0);
}

TEST(RecoverDeflection, ZeroStressGivesZero) {
  const Level& l = square3().finest();
  const auto u = recover_deflection(l.mesh, l.mass, StressCoeffs::zero(3, static_cast<Eigen::Index>(l.mesh.num_edges())));
  EXPECT_EQ(u.size(), static_cast<Eigen::Index>(l.mesh.num_interior_vertices()));
  EXPECT_EQ(max_abs(u.values), 0.0);
  EXPECT_THROW(recover_deflection(l.mesh, l.mass, StressCoeffs::zero(3, 4)), std::invalid_argument);
}

TEST(SolvePlate, AgreesWithDirectSaddleSolve) {
  for (Domain d : {Domain::square, Domain::lshape}) {
    const double nu = default_nu(d);
    const Hierarchy h = build_hierarchy(d, 3, nu);
    const auto f = experiment_load(d, nu);
    SolveOptions opts;
    opts.tol = 1e-12;
    const auto mg = solve_plate(h, f, opts);
    const auto direct = direct_saddle_solve(h.finest().mesh, nu, f);
    const Level& l = h.finest();

    EXPECT_LE(max_abs(Vector(mg.sigma.values - direct.sigma.values)), 1e-7 * max_abs(direct.sigma.values));
    EXPECT_LE(max_abs(Vector(mg.u.values - direct.u.values)), 1e-7 * max_abs(direct.u.values));

    // both satisfy the full saddle system
    const Vector load = load_vector(l.mesh, f).values;
    for (const auto* s : {&mg.sigma, &direct.sigma}) {
      EXPECT_LE(max_abs(Vector(l.bform * s->values + load)), 1e-10 * max_abs(load));
    }
    const Vector first = l.mass * direct.sigma.values + l.bform.transpose() * direct.u.values;
    EXPECT_LE(max_abs(first), 1e-10 * max_abs(Vector(l.mass * direct.sigma.values)));
    const Vector first_mg = l.mass * mg.sigma.values + l.bform.transpose() * mg.u.values;
    EXPECT_LE(max_abs(first_mg), 1e-8 * max_abs(Vector(l.mass * mg.sigma.values)));
  }
}

TEST(SolvePlate, EnergyIdentity) {
  // a(sigma_h, sigma_h) = (f, u_h)
  const Hierarchy& h = square3();
  const auto f = experiment_load(Domain::square, 0.3);
  SolveOptions opts;
  opts.tol = 1e-12;
  const auto sol = solve_plate(h, f, opts);
  const Level& l = h.finest();
  const double energy = sol.sigma.values.dot(l.mass * sol.sigma.values);
  EXPECT_NEAR(energy, l2_dot(l.mesh, f, sol.u), 1e-9 * energy);
  EXPECT_NEAR(energy, load_vector(l.mesh, f).values.dot(sol.u.values), 1e-9 * energy);
}

TEST(SolvePlate, CoarserLevelOfHierarchy) {
  const Hierarchy h = build_hierarchy(Domain::lshape, 3, 0.0);
  const auto f = [](Point2) { return 1.0; };
  const auto sol = solve_plate(h, f, {}, 2);
  EXPECT_EQ(sol.sigma.level, 2);
  EXPECT_EQ(sol.sigma.size(), static_cast<Eigen::Index>(h.level(2).mesh.num_edges()));
  const auto direct = direct_saddle_solve(h.level(2).mesh, 0.0, f);
  EXPECT_LE(max_abs(Vector(sol.sigma.values - direct.sigma.values)), 1e-6 * max_abs(direct.sigma.values));
}

TEST(ComputeErrors, RepresentableFieldGivesZero) {
  const Triangulation& tri = square3().finest().mesh;
  const SymTensor2 t{0.4, -0.2, 1.1};
  ManufacturedCase mc;
  mc.nu = 0.3;
  mc.u = [](Point2) { return 0.0; };
  mc.grad_u = [](Point2) { return Vec2{0.0, 0.0}; };
  mc.hessian_u = [](Point2) { return SymTensor2{}; };
  mc.f = [](Point2) { return 0.0; };
  mc.sigma = [t](Point2) { return t; };
  const auto sigma_h = interp_pi(tri, mc.sigma);
  const auto e = compute_errors(tri, sigma_h, ScalarField::zero(3, static_cast<Eigen::Index>(tri.num_interior_vertices())), mc);
  EXPECT_LE(e.stress_l2, 1e-14);
  EXPECT_EQ(e.deflection_h1, 0.0);
}

TEST(ComputeErrors, InterpolantBoundedBelowByBestFits) {
  // per-cell mean <= L2 best fit in V_h <= interpolant, all measured by compute_errors;
  // at nu = 0 the compliance mass is the L2 Gram matrix of V_h
  const Triangulation& tri = square3().finest().mesh;
  const auto mc = manufactured_square_case(0.0);
  const ScalarField zero_u = ScalarField::zero(3, static_cast<Eigen::Index>(tri.num_interior_vertices()));
  const double pi_err = compute_errors(tri, interp_pi(tri, mc.sigma), zero_u, mc).stress_l2;

  Vector load = Vector::Zero(static_cast<Eigen::Index>(tri.num_edges()));
  double cell_best = 0.0;
  for (CellId c = 0; c < tri.num_cells(); ++c) {
    const auto basis = cell_edge_basis(tri, c);
    const auto& ce = tri.cell_edges(c);
    SymTensor2 mean{};
    for (const auto& q : quadrature::triangle_degree4()) {
      const SymTensor2 s = mc.sigma(detail::barycentric_point(tri, c, q.bary));
      mean = mean + q.weight * s;
      for (int j = 0; j < 3; ++j) load[ce[j].edge] += tri.area(c) * q.weight * ddot(s, basis[j]);
    }
    for (const auto& q : quadrature::triangle_degree4()) {
      const SymTensor2 d = mc.sigma(detail::barycentric_point(tri, c, q.bary)) - mean;
      cell_best += tri.area(c) * q.weight * ddot(d, d);
    }
  }
  cell_best = std::sqrt(cell_best);
  Vector x = Vector::Zero(load.size());
  conjugate_gradient(assemble_mass(tri, 0.0), load, x, 1e-13);
  const double vh_best = compute_errors(tri, StressCoeffs{3, x}, zero_u, mc).stress_l2;

  EXPECT_LE(cell_best, vh_best * (1 + 1e-10));
  EXPECT_LE(vh_best, pi_err * (1 + 1e-10));
  EXPECT_GT(pi_err, 0.0);
}

TEST(RunExperiment, RowsSizesAndDeterminism) {
  ExperimentConfig cfg;
  cfg.levels = 4;
  const auto rows = run_experiment(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].level, 3);
  EXPECT_EQ(rows[0].size, 1089u);
  EXPECT_EQ(rows[1].size, 4225u);
  EXPECT_NEAR(rows[0].h / rows[1].h, 2.0, 1e-12);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.errors);
    EXPECT_FALSE(r.delta);
    EXPECT_GT(r.iters_11, 0);
    EXPECT_LE(r.iters_22, r.iters_11);
  }
  EXPECT_LT(rows[1].errors->stress_l2, rows[0].errors->stress_l2);

  const auto again = run_experiment(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(again[i].iters_11, rows[i].iters_11);
    EXPECT_EQ(again[i].iters_22, rows[i].iters_22);
    EXPECT_EQ(again[i].errors->stress_l2, rows[i].errors->stress_l2);
  }
}

TEST(RunExperiment, LshapeHasNoErrorsAndReportsContraction) {
  ExperimentConfig cfg;
  cfg.domain = Domain::lshape;
  cfg.levels = 3;
  cfg.with_contraction = true;
  const auto rows = run_experiment(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].size, 833u);
  EXPECT_FALSE(rows[0].errors);
  ASSERT_TRUE(rows[0].delta);
  EXPECT_GT(*rows[0].delta, 0.0);
  EXPECT_LT(*rows[0].delta, 1.0);
}
