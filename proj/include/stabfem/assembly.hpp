#pragma once

#include <Eigen/Sparse>

#include "stabfem/fe_space.hpp"

namespace stabfem {

using SparseMat = Eigen::SparseMatrix<double>;

/// Saddle-point blocks on the full DOF set (boundary DOFs included;
/// solvers restrict to interior velocity DOFs).
///   L   = mu * M_V            viscous block
///   B   : qdim x vdim         divergence, (B u)_q = integral q div u
///   M_V : vdim x vdim         V-inner-product Gram (grad u : grad v)
///   M_Q : qdim x qdim         pressure mass matrix
struct OperatorBlocks {
  SparseMat L, B, M_V, M_Q;
  double mu = 1.0;
  const FeSpaces* spaces = nullptr;
};

OperatorBlocks assemble_stokes_blocks(const FeSpaces& spaces, double mu);

/// Convective operator C(u) = (u.grad)u + (1/2) u div u in weak form.
/// Returns the full-size residual vector <C(u), phi_i>.
Eigen::VectorXd convection_residual(const FeSpaces& spaces, const Eigen::VectorXd& u);

/// Exact directional derivative of the convection residual at u.
SparseMat convection_jacobian(const FeSpaces& spaces, const Eigen::VectorXd& u);

/// Velocity load vector <f, phi_i> for an analytic force density.
Eigen::VectorXd assemble_velocity_load(const FeSpaces& spaces,
                                       const std::function<Eigen::Vector2d(double, double)>& f);

/// Pressure load vector <g, q_i> for analytic divergence data.
Eigen::VectorXd assemble_pressure_load(const FeSpaces& spaces,
                                       const std::function<double(double, double)>& g);

/// Evaluates a discrete velocity field and its gradient at a reference
/// point of one cell. grad(r, c) = d u_r / d x_c.
struct VelocitySample {
  Eigen::Vector2d value;
  Eigen::Matrix2d grad;
};
VelocitySample sample_velocity(const FeSpaces& spaces, const Eigen::VectorXd& u, int cell,
                               double xref, double yref);

}  // namespace stabfem
