#pragma once

#include <Eigen/Sparse>

#include "stabfem/assembly.hpp"
#include "stabfem/fe_space.hpp"

namespace stabfem {

enum class PressureStab { none, bp, bh, lps };
enum class VelocityStab { none, lps, supg };

struct StabilizationConfig {
  PressureStab pressure_kind = PressureStab::none;
  VelocityStab velocity_kind = VelocityStab::none;
  double delta0_p = 0.1;
  double delta0_v = 0.3;
  double clamp_eps = 1e-8;
};

PressureStab pressure_stab_from_string(const std::string& s);
VelocityStab velocity_stab_from_string(const std::string& s);

/// Validates the config against the spaces (bh needs k=1, lps needs the
/// macro hierarchy, nonnegative delta0, positive clamp).
void validate_config(const FeSpaces& spaces, const StabilizationConfig& config);

/// Pressure stabilization matrix T (symmetric PSD):
///   bp:  sum_K delta0_p h_K^2 int grad p . grad q
///   bh:  int I_h^1(pq) - pq                     (k=1 only, no constant)
///   lps: sum over patches delta0_p h_P^2 of the gradient fluctuation
SparseMat assemble_pressure_stab(const FeSpaces& spaces, const StabilizationConfig& config);

/// Per-patch gradient fluctuation machinery shared by the LPS pressure
/// and velocity terms: fluct = stiffness minus its projection onto the
/// patch polynomial space.
struct PatchFluctuation {
  std::vector<std::vector<int>> patch_dofs;   // global scalar nodes per patch
  std::vector<Eigen::MatrixXd> fluct;         // fluctuation form per patch
  std::vector<Eigen::MatrixXd> stiffness;     // plain grad-grad form per patch
};
PatchFluctuation build_patch_fluctuation(const FeSpaces& spaces);

/// Nonlinear velocity stabilization S(u). The delta weights are
///   lps:  delta_P(u) = delta0_v * min(h_P, |grad u|_{L2(P)})
///   supg: delta_K(u) = delta0_v * h_K / max(|u|_{Linf(K)}, clamp_eps)
/// Jacobians freeze delta at the current u and differentiate the rest.
Eigen::VectorXd velocity_stab_residual(const FeSpaces& spaces, const StabilizationConfig& config,
                                       const Eigen::VectorXd& u);
SparseMat velocity_stab_jacobian(const FeSpaces& spaces, const StabilizationConfig& config,
                                 const Eigen::VectorXd& u);

/// Max of |u| over quadrature points and vertices of one cell.
double cell_linf_norm(const FeSpaces& spaces, const Eigen::VectorXd& u, int cell);

}  // namespace stabfem
