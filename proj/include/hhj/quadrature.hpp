// Quadrature rules on triangles (barycentric) and edges (unit parameter).

#pragma once

#include <array>

namespace hhj::quadrature {

struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;  // relative to the cell area; weights sum to 1
};

/// Symmetric 6-point rule, exact for polynomials of total degree 4.
inline const std::array<TrianglePoint, 6>& triangle_degree4() {
  static constexpr double a = 0.445948490915964886318329253883;
  static constexpr double wa = 0.223381589678011465944827307725;
  static constexpr double b = 0.091576213509770743459571463402;
  static constexpr double wb = 0.109951743655321867388505358942;
  static const std::array<TrianglePoint, 6> rule{{
      {{a, a, 1.0 - 2.0 * a}, wa},
      {{a, 1.0 - 2.0 * a, a}, wa},
      {{1.0 - 2.0 * a, a, a}, wa},
      {{b, b, 1.0 - 2.0 * b}, wb},
      {{b, 1.0 - 2.0 * b, b}, wb},
      {{1.0 - 2.0 * b, b, b}, wb},
  }};
  return rule;
}

struct LinePoint {
  double s;       // position in [0, 1]
  double weight;  // weights sum to 1
};

/// 2-point Gauss-Legendre, exact to degree 3.
inline const std::array<LinePoint, 2>& gauss2() {
  static const double d = 0.5 / 1.7320508075688772935274463;
  static const std::array<LinePoint, 2> rule{{{0.5 - d, 0.5}, {0.5 + d, 0.5}}};
  return rule;
}

/// 4-point Gauss-Legendre, exact to degree 7.
inline const std::array<LinePoint, 4>& gauss4() {
  static constexpr double x1 = 0.339981043584856264802665759103;
  static constexpr double x2 = 0.861136311594052575223946488893;
  static constexpr double w1 = 0.652145154862546142626936050778;
  static constexpr double w2 = 0.347854845137453857373063949222;
  static const std::array<LinePoint, 4> rule{{{0.5 - 0.5 * x2, 0.5 * w2},
                                              {0.5 - 0.5 * x1, 0.5 * w1},
                                              {0.5 + 0.5 * x1, 0.5 * w1},
                                              {0.5 + 0.5 * x2, 0.5 * w2}}};
  return rule;
}

}  // namespace hhj::quadrature
