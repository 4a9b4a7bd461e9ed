// Sparse operators, typed coefficient vectors and the Krylov/rank utilities
// shared by assembly, certifiers and the multigrid solver.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>
#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhj {

/// Compressed-sparse-row matrix; setFromTriplets leaves sorted, duplicate-free rows.
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;
using Vector = Eigen::VectorXd;

/// Raised when an iterative solver fails to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A coefficient vector tagged with the mesh level it lives on.
template <class Tag>
struct Field {
  int level = 0;
  Vector values;

  Field() = default;
  Field(int lvl, Vector v) : level(lvl), values(std::move(v)) {}
  static Field zero(int lvl, Eigen::Index n) { return {lvl, Vector::Zero(n)}; }
  Eigen::Index size() const { return values.size(); }
};

struct StressTag;
struct StressDualTag;
struct ScalarTag;
struct ScalarDualTag;
struct VectorTag;

/// One coefficient per edge: the constant normal-normal moment on that edge.
using StressCoeffs = Field<StressTag>;
/// A functional on stress coefficients (right-hand sides and residuals).
using StressDual = Field<StressDualTag>;
/// P1 values at interior vertices.
using ScalarField = Field<ScalarTag>;
using ScalarDual = Field<ScalarDualTag>;
/// P1 vector field, two interleaved components per vertex: (phi1, phi2) of vertex v at 2v, 2v+1.
using VectorField = Field<VectorTag>;

inline SparseOperator from_triplets(Eigen::Index rows, Eigen::Index cols,
                                    const std::vector<Triplet>& triplets) {
  SparseOperator m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

inline double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

inline double max_abs(const SparseOperator& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Coefficients of a (preconditioned) CG run, from which the Lanczos
/// tridiagonal of the preconditioned operator is rebuilt.
struct LanczosTrace {
  std::vector<double> alpha;
  std::vector<double> beta;

  /// Extreme Ritz values (smallest, largest).
  std::pair<double, double> extreme_eigenvalues() const {
    const auto n = static_cast<Eigen::Index>(alpha.size());
    if (n == 0) return {0.0, 0.0};
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      t(j, j) = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
      if (j + 1 < n) t(j, j + 1) = t(j + 1, j) = std::sqrt(beta[j]) / alpha[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(n - 1)};
  }
};

struct Identity {
  const Vector& operator()(const Vector& r) const { return r; }
};

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// operator. Stops when ||b - A x|| <= rtol ||b||. Consistent semidefinite
/// systems converge to a solution whose null-space part is that of the start.
template <class ApplyA, class ApplyPrec = Identity>
CgResult conjugate_gradient(const ApplyA& apply, const Vector& b, Vector& x, double rtol,
                            int max_iter, const ApplyPrec& precondition = {},
                            LanczosTrace* trace = nullptr) {
  if (x.size() != b.size()) x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return {0, 0.0};
  }
  Vector r = b - apply(x);
  double rnorm = r.norm();
  if (rnorm <= rtol * bnorm) return {0, rnorm / bnorm};
  Vector z = precondition(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Vector ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw SolverError("conjugate gradients: operator is not positive on the search direction");
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    rnorm = r.norm();
    if (trace) trace->alpha.push_back(alpha);
    if (rnorm <= rtol * bnorm) return {it, rnorm / bnorm};
    z = precondition(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    if (trace) trace->beta.push_back(beta);
    rz = rz_new;
    p = z + beta * p;
  }
  throw SolverError("conjugate gradients did not reach relative residual " + std::to_string(rtol) +
                    " in " + std::to_string(max_iter) + " iterations (reached " +
                    std::to_string(rnorm / bnorm) + ")");
}

inline CgResult conjugate_gradient(const SparseOperator& a, const Vector& b, Vector& x, double rtol,
                                   int max_iter = -1) {
  if (max_iter < 0) max_iter = 10 * static_cast<int>(b.size()) + 100;
  return conjugate_gradient([&](const Vector& v) -> Vector { return a * v; }, b, x, rtol, max_iter);
}

/// Numerical rank with threshold rel_tol * sigma_max. Dense SVD for matrices
/// up to 1.2e7 entries, sparse rank-revealing QR beyond that.
inline Eigen::Index numeric_rank(const SparseOperator& m, double rel_tol = 1e-9) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const double entries = static_cast<double>(m.rows()) * static_cast<double>(m.cols());
  if (entries <= 1.2e7) {
    Eigen::MatrixXd dense(m);
    if (dense.rows() < dense.cols()) dense.transposeInPlace();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
    const auto& s = svd.singularValues();
    const double cut = rel_tol * s(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > cut) ++rank;
    return rank;
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> cm(m);
  cm.makeCompressed();
  double colmax = 0.0;
  for (int k = 0; k < cm.outerSize(); ++k) colmax = std::max(colmax, cm.col(k).norm());
  Eigen::SparseQR<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(rel_tol * colmax);
  qr.compute(cm);
  if (qr.info() != Eigen::Success) throw SolverError("sparse QR rank computation failed");
  return qr.rank();
}

}  // namespace hhj
