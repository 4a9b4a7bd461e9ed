// V-cycle multigrid for the constrained stress problem
//
//   find sigma in ker B_k:  a(sigma, kappa) = <r, kappa>  for all kappa in ker B_k
//
// on a hierarchy of red-refined meshes. The smoother is a multiplicative
// Schwarz sweep over vertex patches whose local spaces are spanned by the
// symmetric curls of the two vector hat functions of the vertex; those lie in
// ker B by exactness, so the local constrained problems reduce to 2x2 solves.
// Prolongation is the natural inclusion V_{k-1} -> V_k, restriction its
// transpose. The coarsest level is solved exactly through the S_h potential.

#pragma once

#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhj/fem.hpp"

namespace hhj {

struct CycleConfig {
  int pre = 1;   // m1: forward sweeps before the coarse correction
  int post = 1;  // m2: backward sweeps after it
};

enum class SweepOrder { forward, backward };

/// The two kernel directions of vertex i, restricted to the edges incident to i
/// (their only support), and their a-Gram matrix.
struct PatchKernelBasis {
  VertexId vertex = 0;
  std::vector<EdgeId> edges;
  Eigen::Matrix<double, Eigen::Dynamic, 2> columns;
  Eigen::Matrix2d gram;
  Eigen::Matrix2d gram_inverse;
};

/// l2-orthogonal projection onto ker B through a sparse Cholesky factor of B B^T.
class KernelProjector {
 public:
  KernelProjector() = default;
  explicit KernelProjector(const SparseOperator& b) : b_(b) {
    if (b_.rows() == 0) return;
    ldlt_ = std::make_shared<Factor>(ColMatrix(b_ * b_.transpose()));
    if (ldlt_->info() != Eigen::Success) throw SolverError("factorization of B B^T failed");
  }
  Vector operator()(const Vector& x) const {
    if (!ldlt_) return x;
    // B B^T is poorly conditioned on fine levels; a second pass removes what
    // the first solve left in range B^T.
    Vector y = x - b_.transpose() * ldlt_->solve(Vector(b_ * x));
    y -= b_.transpose() * ldlt_->solve(Vector(b_ * y));
    return y;
  }

 private:
  using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  using Factor = Eigen::SimplicialLDLT<ColMatrix>;
  SparseOperator b_;
  std::shared_ptr<const Factor> ldlt_;
};

struct Level {
  Triangulation mesh;
  SparseOperator mass;            // a(., .) on V_k
  SparseOperator bform;           // P_k x V_k
  SparseOperator symcurl;         // S_k -> V_k
  SparseOperator prolongation;    // V_{k-1} -> V_k, empty on level 1
  SparseOperator s_prolongation;  // S_{k-1} -> S_k, empty on level 1
  RefinementMap refinement;       // from level k-1, empty on level 1
  std::vector<PatchKernelBasis> patches;
  KernelProjector kernel_projector;
};

/// Natural inclusion of V_{k-1} into V_k. A fine edge that halves a coarse
/// edge E inherits E's coefficient; a fine edge interior to a coarse cell
/// receives n_f^T tau n_f from the coarse cell's three basis tensors.
inline SparseOperator assemble_prolongation(const Triangulation& coarse, const Triangulation& fine,
                                            const RefinementMap& map) {
  const std::size_t nvc = coarse.num_vertices();
  std::vector<Triplet> trips;
  trips.reserve(3 * fine.num_edges());
  for (EdgeId f = 0; f < fine.num_edges(); ++f) {
    const Edge& edge = fine.edge(f);
    const auto [a, b] = edge.vertices;  // a < b
    if (a < nvc) {
      trips.emplace_back(static_cast<int>(f), static_cast<int>(b - nvc), 1.0);
      continue;
    }
    const CellId parent = containing_coarse_cell(map, edge.cells[0]);
    const auto basis = cell_edge_basis(coarse, parent);
    const auto& ce = coarse.cell_edges(parent);
    for (int j = 0; j < 3; ++j)
      trips.emplace_back(static_cast<int>(f), static_cast<int>(ce[j].edge),
                         basis[j].normal_normal(edge.normal));
  }
  return from_triplets(static_cast<Eigen::Index>(fine.num_edges()),
                       static_cast<Eigen::Index>(coarse.num_edges()), trips);
}

/// P1 vector interpolation S_{k-1} -> S_k.
inline SparseOperator assemble_s_prolongation(const Triangulation& coarse, const RefinementMap& map) {
  const std::size_t nvc = coarse.num_vertices();
  std::vector<Triplet> trips;
  for (VertexId v = 0; v < nvc; ++v)
    for (int m = 0; m < 2; ++m) trips.emplace_back(static_cast<int>(2 * v + m), static_cast<int>(2 * v + m), 1.0);
  for (EdgeId e = 0; e < coarse.num_edges(); ++e) {
    const VertexId mid = map.fine_vertex_of_coarse_edge[e];
    for (VertexId v : coarse.edge(e).vertices)
      for (int m = 0; m < 2; ++m)
        trips.emplace_back(static_cast<int>(2 * mid + m), static_cast<int>(2 * v + m), 0.5);
  }
  const std::size_t nvf = nvc + coarse.num_edges();
  return from_triplets(static_cast<Eigen::Index>(2 * nvf), static_cast<Eigen::Index>(2 * nvc), trips);
}

inline std::vector<PatchKernelBasis> build_patches(const Triangulation& tri, const SparseOperator& mass,
                                                   const SparseOperator& symcurl) {
  std::vector<PatchKernelBasis> patches(tri.num_vertices());
  for (VertexId v = 0; v < tri.num_vertices(); ++v) {
    PatchKernelBasis& p = patches[v];
    p.vertex = v;
    p.edges = tri.vertex_edges(v);
    const auto n = static_cast<Eigen::Index>(p.edges.size());
    p.columns.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int m = 0; m < 2; ++m)
        p.columns(i, m) = symcurl.coeff(static_cast<int>(p.edges[i]), static_cast<int>(2 * v + m));
    Eigen::MatrixXd local(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        local(i, j) = mass.coeff(static_cast<int>(p.edges[i]), static_cast<int>(p.edges[j]));
    p.gram = p.columns.transpose() * local * p.columns;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p.gram, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()(0) > 1e-12 * es.eigenvalues()(1)))
      throw SolverError("patch of vertex " + std::to_string(v) + " has a singular local Gram matrix");
    p.gram_inverse = p.gram.inverse();
  }
  return patches;
}

class Hierarchy {
 public:
  Hierarchy(std::vector<Level> levels, double nu, CycleConfig cycle)
      : levels_(std::move(levels)), nu_(nu), cycle_(cycle) {
    const Level& l1 = levels_.front();
    coarse_operator_ = SparseOperator(l1.symcurl.transpose() * (l1.mass * l1.symcurl));
    coarse_kernel_ = rigid_fields(l1.mesh);
  }

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const Level& level(int k) const {
    if (k < 1 || k > num_levels())
      throw std::out_of_range("level " + std::to_string(k) + " outside 1.." + std::to_string(num_levels()));
    return levels_[static_cast<std::size_t>(k - 1)];
  }
  const Level& finest() const { return levels_.back(); }
  double nu() const { return nu_; }
  CycleConfig cycle() const { return cycle_; }
  /// C_1^T M_1 C_1, the coarsest-level problem in S_h coordinates.
  const SparseOperator& coarse_operator() const { return coarse_operator_; }
  /// Orthonormal basis of ker C_1: the fields a + b (x, y).
  const Eigen::MatrixXd& coarse_kernel() const { return coarse_kernel_; }

  static Eigen::MatrixXd rigid_fields(const Triangulation& tri) {
    const auto nv = static_cast<Eigen::Index>(tri.num_vertices());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * nv, 3);
    for (Eigen::Index v = 0; v < nv; ++v) {
      const Point2 x = tri.vertex(static_cast<VertexId>(v));
      k(2 * v, 0) = 1.0;
      k(2 * v + 1, 1) = 1.0;
      k(2 * v, 2) = x.x;
      k(2 * v + 1, 2) = x.y;
    }
    return Eigen::HouseholderQR<Eigen::MatrixXd>(k).householderQ() * Eigen::MatrixXd::Identity(2 * nv, 3);
  }

 private:
  std::vector<Level> levels_;
  double nu_;
  CycleConfig cycle_;
  SparseOperator coarse_operator_;
  Eigen::MatrixXd coarse_kernel_;
};

inline Level make_level(Triangulation mesh, double nu) {
  Level l;
  l.mesh = std::move(mesh);
  l.mass = assemble_mass(l.mesh, nu);
  l.bform = assemble_bform(l.mesh);
  l.symcurl = assemble_symcurl(l.mesh);
  l.patches = build_patches(l.mesh, l.mass, l.symcurl);
  l.kernel_projector = KernelProjector(l.bform);
  return l;
}

inline Hierarchy build_hierarchy(Triangulation coarse, int levels, double nu, int m1 = 1, int m2 = 1) {
  if (levels < 1) throw std::invalid_argument("hierarchy needs at least one level");
  if (m1 < 0 || m2 < 0 || m1 + m2 < 1) throw std::invalid_argument("smoothing steps need m1, m2 >= 0 and m1 + m2 >= 1");
  check_poisson_ratio(nu);
  std::vector<Level> ls;
  ls.reserve(static_cast<std::size_t>(levels));
  ls.push_back(make_level(std::move(coarse), nu));
  for (int k = 2; k <= levels; ++k) {
    const Level& prev = ls.back();
    auto [fine, map] = refine_uniform(prev.mesh);
    Level l = make_level(std::move(fine), nu);
    l.prolongation = assemble_prolongation(prev.mesh, l.mesh, map);
    l.s_prolongation = assemble_s_prolongation(prev.mesh, map);
    l.refinement = std::move(map);
    ls.push_back(std::move(l));
  }
  return Hierarchy(std::move(ls), nu, {m1, m2});
}

inline Hierarchy build_hierarchy(Domain domain, int levels, double nu, int m1 = 1, int m2 = 1) {
  return build_hierarchy(initial_mesh(domain), levels, nu, m1, m2);
}

inline const SparseOperator& prolongation(const Hierarchy& hier, int k) {
  if (k < 2) throw std::out_of_range("prolongation is defined for levels k >= 2");
  return hier.level(k).prolongation;
}

namespace detail {

inline void check_level_sizes(const Hierarchy& hier, int k, Eigen::Index sigma_size, Eigen::Index r_size) {
  const auto n = static_cast<Eigen::Index>(hier.level(k).mesh.num_edges());
  if (sigma_size != n || r_size != n)
    throw std::invalid_argument("level " + std::to_string(k) + " expects " + std::to_string(n) +
                                " stress coefficients");
}

inline void smooth_in_place(const Level& level, Vector& sigma, const Vector& r, SweepOrder order) {
  const SparseOperator& m = level.mass;
  const int* outer = m.outerIndexPtr();
  const int* inner = m.innerIndexPtr();
  const double* val = m.valuePtr();
  auto visit = [&](const PatchKernelBasis& p) {
    const auto n = static_cast<Eigen::Index>(p.edges.size());
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto e = static_cast<int>(p.edges[static_cast<std::size_t>(i)]);
      double res = r[e];
      for (int k = outer[e]; k < outer[e + 1]; ++k) res -= val[k] * sigma[inner[k]];
      g[0] += p.columns(i, 0) * res;
      g[1] += p.columns(i, 1) * res;
    }
    const Eigen::Vector2d c = p.gram_inverse * g;
    for (Eigen::Index i = 0; i < n; ++i)
      sigma[static_cast<Eigen::Index>(p.edges[static_cast<std::size_t>(i)])] +=
          p.columns(i, 0) * c[0] + p.columns(i, 1) * c[1];
  };
  if (order == SweepOrder::forward)
    for (const auto& p : level.patches) visit(p);
  else
    for (auto it = level.patches.rbegin(); it != level.patches.rend(); ++it) visit(*it);
}

inline Vector coarse_solve(const Hierarchy& hier, const Vector& r, Vector* potential = nullptr) {
  const Level& l1 = hier.level(1);
  // Near convergence C_1^T r is small next to r, and its rounding error has a
  // component in ker C_1 that CG cannot reduce.
  Vector rhs = l1.symcurl.transpose() * r;
  rhs -= hier.coarse_kernel() * (hier.coarse_kernel().transpose() * rhs);
  Vector phi = potential ? *potential : Vector::Zero(rhs.size());
  const SparseOperator& a = hier.coarse_operator();
  conjugate_gradient([&](const Vector& x) -> Vector { return a * x; }, rhs, phi, 1e-12,
                     20 * static_cast<int>(rhs.size()) + 100);
  if (potential) *potential = phi;
  return l1.symcurl * phi;
}

inline void vcycle_in_place(const Hierarchy& hier, int k, Vector& sigma, const Vector& r, CycleConfig cyc) {
  if (k == 1) {
    sigma = coarse_solve(hier, r);
    return;
  }
  const Level& level = hier.level(k);
  for (int j = 0; j < cyc.pre; ++j) smooth_in_place(level, sigma, r, SweepOrder::forward);
  const Vector r_coarse = level.prolongation.transpose() * (r - level.mass * sigma);
  Vector e_coarse = Vector::Zero(r_coarse.size());
  vcycle_in_place(hier, k - 1, e_coarse, r_coarse, cyc);
  sigma += level.prolongation * e_coarse;
  for (int j = 0; j < cyc.post; ++j) smooth_in_place(level, sigma, r, SweepOrder::backward);
}

}  // namespace detail

/// One multiplicative sweep over all vertex patches of level k.
inline StressCoeffs smooth(const Hierarchy& hier, int k, const StressCoeffs& sigma, const StressDual& r,
                           SweepOrder order) {
  detail::check_level_sizes(hier, k, sigma.size(), r.size());
  StressCoeffs out{k, sigma.values};
  detail::smooth_in_place(hier.level(k), out.values, r.values, order);
  return out;
}

/// Exact solve on level 1: sigma = C_1 phi with (C_1^T M_1 C_1) phi = C_1^T r.
/// `initial_potential`, when given, is the CG start for phi.
inline StressCoeffs coarse_solve(const Hierarchy& hier, const StressDual& r,
                                 std::optional<VectorField> initial_potential = std::nullopt) {
  detail::check_level_sizes(hier, 1, r.size(), r.size());
  if (initial_potential) {
    Vector phi = initial_potential->values;
    return {1, detail::coarse_solve(hier, r.values, &phi)};
  }
  return {1, detail::coarse_solve(hier, r.values)};
}

inline StressCoeffs vcycle(const Hierarchy& hier, int k, const StressCoeffs& sigma, const StressDual& r,
                           std::optional<CycleConfig> cycle = std::nullopt) {
  detail::check_level_sizes(hier, k, sigma.size(), r.size());
  StressCoeffs out{k, sigma.values};
  detail::vcycle_in_place(hier, k, out.values, r.values, cycle.value_or(hier.cycle()));
  return out;
}

/// Relative residual of the saddle system with the best multiplier:
/// min_u ||r - M sigma - B^T u|| / min_u ||r - B^T u||, i.e. the l2 projection
/// of the residual onto ker B.
inline double kernel_residual(const Level& level, const Vector& sigma, const Vector& r) {
  const double denom = level.kernel_projector(r).norm();
  if (denom == 0.0) return 0.0;
  return level.kernel_projector(r - level.mass * sigma).norm() / denom;
}

/// The same residual pulled back to S_h coordinates: ||C^T (r - M sigma)|| / ||C^T r||.
inline double pullback_residual(const Level& level, const Vector& sigma, const Vector& r) {
  const double denom = (level.symcurl.transpose() * r).norm();
  if (denom == 0.0) return 0.0;
  return (level.symcurl.transpose() * (r - level.mass * sigma)).norm() / denom;
}

inline double a_norm(const Level& level, const Vector& sigma) {
  return std::sqrt(std::max(0.0, sigma.dot(level.mass * sigma)));
}

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 200;
  std::optional<CycleConfig> cycle;
  /// Called with (iteration, iterate) after every V-cycle.
  std::function<void(int, const Vector&)> observer;
};

struct MgResult {
  StressCoeffs sigma;
  int iterations = 0;
  std::vector<double> residual_history;  // relative residual, entry 0 is the start
};

/// Iterates sigma <- vcycle(J, sigma, r) from zero on the level of r until
/// kernel_residual <= tol. Throws SolverError when max_iter is exceeded.
inline MgResult mg_solve(const Hierarchy& hier, const StressDual& r, const SolveOptions& opts = {}) {
  const int k = r.level;
  detail::check_level_sizes(hier, k, r.size(), r.size());
  const Level& level = hier.level(k);
  const CycleConfig cyc = opts.cycle.value_or(hier.cycle());
  MgResult res;
  res.sigma = StressCoeffs::zero(k, r.size());
  res.residual_history.push_back(level.kernel_projector(r.values).norm() == 0.0 ? 0.0 : 1.0);
  double rel = res.residual_history.back();
  while (rel > opts.tol) {
    if (res.iterations >= opts.max_iter)
      throw SolverError("multigrid did not reach relative residual " + std::to_string(opts.tol) + " in " +
                        std::to_string(opts.max_iter) + " V-cycles (reached " + std::to_string(rel) + ")");
    detail::vcycle_in_place(hier, k, res.sigma.values, r.values, cyc);
    ++res.iterations;
    rel = kernel_residual(level, res.sigma.values, r.values);
    res.residual_history.push_back(rel);
    if (opts.observer) opts.observer(res.iterations, res.sigma.values);
  }
  return res;
}

struct ContractionEstimate {
  double delta = 0.0;
  std::vector<double> ratios;  // ||e_{m+1}||_A / ||e_m||_A for m = 0, 1, ...
};

/// delta = max over m in [first, last] of ||sigma* - sigma^{m+1}||_A / ||sigma* - sigma^m||_A,
/// iterating from zero. Ratios are only formed while the error is well above
/// the accuracy of the reference.
inline ContractionEstimate estimate_contraction(const Hierarchy& hier, const StressDual& r,
                                                const StressCoeffs& reference,
                                                std::optional<CycleConfig> cycle = std::nullopt,
                                                int first = 5, int last = 15) {
  const int k = r.level;
  detail::check_level_sizes(hier, k, reference.size(), r.size());
  const Level& level = hier.level(k);
  const CycleConfig cyc = cycle.value_or(hier.cycle());
  ContractionEstimate est;
  Vector sigma = Vector::Zero(r.size());
  const double e0 = a_norm(level, reference.values);
  double prev = e0;
  for (int m = 0; m <= last; ++m) {
    detail::vcycle_in_place(hier, k, sigma, r.values, cyc);
    const double err = a_norm(level, Vector(reference.values - sigma));
    if (prev <= 1e-11 * e0) break;
    est.ratios.push_back(err / prev);
    if (m >= first) est.delta = std::max(est.delta, err / prev);
    prev = err;
  }
  return est;
}

struct SpectrumEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;
  double condition() const { return lambda_max / lambda_min; }
};

/// Lanczos (through PCG) estimate of the spectrum of B A on the complement of
/// ker A, where A = C_k^T M_k C_k is the kernel problem in S_h coordinates and B
/// is the additive patch preconditioner: one-level B = D_k^{-1} with the 2x2
/// patch Gram blocks, or multilevel B = sum_l I_{k<-l} D_l^{-1} I_{k<-l}^T over
/// all levels l <= k (the subspace splitting K_h = sum_l sum_i K_{l,i}).
inline SpectrumEstimate additive_schwarz_spectrum(const Hierarchy& hier, int k, bool multilevel,
                                                  unsigned seed = 7) {
  const Level& level = hier.level(k);
  auto apply_a = [&](const Vector& x) -> Vector {
    return level.symcurl.transpose() * (level.mass * (level.symcurl * x));
  };
  auto block_jacobi = [&](int l, const Vector& r) -> Vector {
    Vector z(r.size());
    for (const auto& p : hier.level(l).patches) {
      const auto i = static_cast<Eigen::Index>(2 * p.vertex);
      z.segment<2>(i) = p.gram_inverse * r.segment<2>(i);
    }
    return z;
  };
  std::function<Vector(int, const Vector&)> apply_b = [&](int l, const Vector& r) -> Vector {
    Vector z = block_jacobi(l, r);
    if (multilevel && l > 1) {
      const SparseOperator& p = hier.level(l).s_prolongation;
      z += p * apply_b(l - 1, p.transpose() * r);
    }
    return z;
  };
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(static_cast<Eigen::Index>(2 * level.mesh.num_vertices()));
  for (auto& v : x) v = dist(gen);
  const Vector b = apply_a(x);
  Vector sol = Vector::Zero(b.size());
  LanczosTrace trace;
  const auto res = conjugate_gradient(apply_a, b, sol, 1e-10, 2000,
                                      [&](const Vector& r) { return apply_b(k, r); }, &trace);
  const auto [lo, hi] = trace.extreme_eigenvalues();
  return {lo, hi, res.iterations};
}

}  // namespace hhj
