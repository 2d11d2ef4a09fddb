#pragma once

#include <vector>

namespace stabfem {

/// Quadrature rule on the reference triangle {(x,y): x,y>=0, x+y<=1},
/// positive weights summing to the reference area 1/2. Low orders use
/// symmetric (Dunavant) rules, higher orders a conical product rule.
struct QuadratureRule {
  struct Point {
    double x, y, w;
  };
  std::vector<Point> points;
  int exactness_degree = 0;
};

/// Returns a rule exact for polynomials of at least the given total
/// degree (supported up to 20).
QuadratureRule triangle_rule(int degree);

}  // namespace stabfem
