#pragma once

#include "stabfem/solver.hpp"

namespace stabfem {

/// Closed-form solution with all data needed to manufacture the forcing
/// term per problem type.
struct ManufacturedCase {
  std::string id;
  VectorFn u;                                        // exact velocity
  std::function<Eigen::Matrix2d(double, double)> grad_u;  // row r = grad of u_r
  VectorFn laplace_u;
  ScalarFn p;
  VectorFn grad_p;
  ScalarFn div_u;  // nonzero only for the generalized Stokes case

  /// Forcing for the given problem type at viscosity mu (adds the
  /// convective term for nse).
  VectorFn force(ProblemKind kind, double mu) const;
};

/// Known ids: stokes_trig, nse_trig, gstokes_div.
ManufacturedCase manufactured_solution(const std::string& id);

struct ErrorNorms {
  double u_l2 = 0.0;
  double u_h1 = 0.0;  // seminorm of the velocity error
  double p_l2 = 0.0;
};

ErrorNorms compute_errors(const FeSpaces& spaces, const SaddleState& x,
                          const ManufacturedCase& mc);

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  ErrorNorms err;
  double eoc_u_l2 = 0.0, eoc_u_h1 = 0.0, eoc_p_l2 = 0.0;  // 0 on the first row
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool complete = true;  // false if a level's solver failed
  std::string to_csv() const;
};

/// Solves the case on each level n and fills experimental orders of
/// convergence log2(err_coarse / err_fine).
ConvergenceTable run_convergence(const ManufacturedCase& mc, ProblemKind kind, double mu,
                                 const StabilizationConfig& stab, int k,
                                 const std::vector<int>& levels);

/// Regularized lid velocity (16 x^2 (1-x)^2, 0) on y = 1, zero elsewhere.
VectorFn cavity_lid_bc();

}  // namespace stabfem
