#include "stabfem/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace stabfem {

namespace {

// Weights below are normalized to the unit-area triangle (Dunavant
// tables); they are rescaled by 1/2 when emitted.
void add_center(QuadratureRule& r, double w) { r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 0.5 * w}); }

void add_sym3(QuadratureRule& r, double a, double w) {
  // barycentric (a, a, 1-2a) and permutations
  double b = 1.0 - 2.0 * a;
  r.points.push_back({a, a, 0.5 * w});
  r.points.push_back({a, b, 0.5 * w});
  r.points.push_back({b, a, 0.5 * w});
}

struct Gauss1d {
  std::vector<double> x;  // nodes on [0, 1]
  std::vector<double> w;
};

// Golub-Welsch nodes/weights for the Jacobi weight (1-x)^alpha on [0,1]
// (alpha = 0 gives Gauss-Legendre); machine-precision by construction.
Gauss1d gauss_jacobi(int n, int alpha) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  double mu0;
  if (alpha == 0) {
    mu0 = 2.0;
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  } else {  // alpha = 1
    mu0 = 2.0;
    for (int k = 0; k < n; ++k) J(k, k) = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    for (int k = 1; k < n; ++k)
      J(k, k - 1) = J(k - 1, k) = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Gauss1d g;
  // map [-1,1] -> [0,1]; the weight (1-x) picks up a factor 2, dx one of
  // 1/2, hence the total 2^-(alpha+1)
  double scale = mu0 / std::pow(2.0, alpha + 1);
  for (int i = 0; i < n; ++i) {
    g.x.push_back(0.5 * (es.eigenvalues()[i] + 1.0));
    double v0 = es.eigenvectors()(0, i);
    g.w.push_back(scale * v0 * v0);
  }
  return g;
}

// Conical product rule via the Duffy map (x, y) = (t, u(1-t)): exact for
// total degree 2n-1 with n^2 points, all inside and positive.
void add_conical(QuadratureRule& r, int n) {
  Gauss1d leg = gauss_jacobi(n, 0);
  Gauss1d jac = gauss_jacobi(n, 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      r.points.push_back({jac.x[j], leg.x[i] * (1.0 - jac.x[j]), leg.w[i] * jac.w[j]});
}

}  // namespace

QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  if (degree <= 1) {
    r.exactness_degree = 1;
    add_center(r, 1.0);
  } else if (degree == 2) {
    r.exactness_degree = 2;
    add_sym3(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 4) {
    r.exactness_degree = 4;
    add_sym3(r, 0.445948490915965, 0.223381589678011);
    add_sym3(r, 0.091576213509771, 0.109951743655322);
  } else if (degree <= 5) {
    r.exactness_degree = 5;
    add_center(r, 0.225);
    add_sym3(r, 0.470142064105115, 0.132394152788506);
    add_sym3(r, 0.101286507323456, 0.125939180544827);
  } else if (degree <= 20) {
    int n = (degree + 2) / 2;
    r.exactness_degree = 2 * n - 1;
    add_conical(r, n);
  } else {
    throw std::invalid_argument("triangle_rule: degree > 20 not supported");
  }
  return r;
}

}  // namespace stabfem
