// Symmetric 2x2 tensors and the plate compliance operator C.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hhj/mesh.hpp"

namespace hhj {

struct SymTensor2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static SymTensor2 identity() { return {1.0, 0.0, 1.0}; }

  double trace() const { return a11 + a22; }

  /// n^T tau n
  double normal_normal(Vec2 n) const { return n.x * n.x * a11 + 2.0 * n.x * n.y * a12 + n.y * n.y * a22; }
  /// t^T tau n
  double tangent_normal(Vec2 t, Vec2 n) const {
    return t.x * n.x * a11 + (t.x * n.y + t.y * n.x) * a12 + t.y * n.y * a22;
  }
  Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }

  friend SymTensor2 operator+(const SymTensor2& a, const SymTensor2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22};
  }
  friend SymTensor2 operator-(const SymTensor2& a, const SymTensor2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22};
  }
  friend SymTensor2 operator*(double s, const SymTensor2& a) { return {s * a.a11, s * a.a12, s * a.a22}; }
  friend bool operator==(const SymTensor2&, const SymTensor2&) = default;
};

/// Frobenius product sigma : tau.
inline double ddot(const SymTensor2& s, const SymTensor2& t) {
  return s.a11 * t.a11 + 2.0 * s.a12 * t.a12 + s.a22 * t.a22;
}

inline double max_abs(const SymTensor2& t) {
  return std::max({std::abs(t.a11), std::abs(t.a12), std::abs(t.a22)});
}

inline void check_poisson_ratio(double nu) {
  if (!(nu >= 0.0 && nu < 0.5))
    throw std::invalid_argument("Poisson ratio must lie in [0, 0.5), got " + std::to_string(nu));
}

/// C tau = tau/(1-nu) - nu/(1-nu^2) tr(tau) I
inline SymTensor2 c_apply(const SymTensor2& tau, double nu) {
  check_poisson_ratio(nu);
  const double s = 1.0 / (1.0 - nu);
  const double t = nu / (1.0 - nu * nu) * tau.trace();
  return {s * tau.a11 - t, s * tau.a12, s * tau.a22 - t};
}

/// Inverse of c_apply: (1-nu) s + nu tr(s) I.
inline SymTensor2 c_inverse_apply(const SymTensor2& s, double nu) {
  check_poisson_ratio(nu);
  const double t = nu * s.trace();
  return {(1.0 - nu) * s.a11 + t, (1.0 - nu) * s.a12, (1.0 - nu) * s.a22 + t};
}

}  // namespace hhj
