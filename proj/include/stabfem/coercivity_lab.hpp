#pragma once

#include <cstdint>

#include "stabfem/solver.hpp"

namespace stabfem {

/// Deterministic 64-bit generator (splitmix64) with a Box-Muller normal
/// sampler; identical seeds give bit-identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();  // (0, 1)
  double normal();
  Eigen::VectorXd normal_vector(int n);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Estimated constants of the coercivity framework and the derived
/// radii. alpha and c_L equal mu by construction of the V-norm.
struct ConstantSet {
  double alpha = 0.0;
  double c_L = 0.0;
  double c_Theta = 0.0;
  double c_N = 0.0;
  double c_T = 0.0;  // infinity encoded as std::numeric_limits<double>::infinity()
  double f_dual_norm = 0.0;
  double tau_max1 = 0.0;
  double tau_max2 = 0.0;
  double tau_max3 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r = 0.0;

  /// Fills tau_max1..3 and the radii from the estimated constants and
  /// |f|_V'.
  void derive_radii();
};

struct CoercivityReport {
  double gamma_stab = 0.0;
  double c_T = 0.0;
  double beta_min = 0.0;
  double tau = 0.0;
  std::vector<double> margins;
  std::vector<double> radii;
  int sample_count = 0;
  std::uint64_t seed = 0;
  bool verdict = true;
};

/// Smallest generalized eigenvalue of (L, M_V) on interior DOFs by
/// inverse iteration; equals mu since L = mu M_V.
double estimate_alpha(const ReducedOps& ops, int max_iters = 500);

/// Discrete sup-attaining direction Theta p = scale * M_V^-1 B^T p,
/// rescaled so <B Theta p, p> equals |p|_Q^2. Tracks the running
/// estimate c_Theta = max |Theta p|_V / |p|_Q over calls.
class ThetaOperator {
 public:
  explicit ThetaOperator(const ReducedOps& ops) : ops_(&ops) {}
  /// p must have zero mean. raw_schur receives p^T B M_V^-1 B^T p.
  Eigen::VectorXd apply(const Eigen::VectorXd& p, double* raw_schur = nullptr) const;
  double c_theta() const { return c_theta_; }
  const ReducedOps& ops() const { return *ops_; }

 private:
  const ReducedOps* ops_;
  mutable double c_theta_ = 0.0;
};

struct InfSupResult {
  double gamma_stab = 0.0;
  double c_T = 0.0;
  Eigen::MatrixXd eigenbasis;     // zero-mean pressure modes, columns
  Eigen::VectorXd eigenvalues;    // of (Schur + T, M_Q) on the subspace
};

/// gamma_stab^2 = smallest generalized eigenvalue of (B M_V^-1 B^T + T,
/// M_Q) on the zero-mean subspace; c_T estimated on the eigenbasis plus
/// random samples via (1/2 |p|_Q^2 - s(p))_+ / <Tp,p>.
InfSupResult estimate_infsup(const ReducedOps& ops, std::uint64_t seed = 12345,
                             int extra_samples = 100);

struct CNResult {
  double c_N = 0.0;
  double per_amplitude[3] = {0.0, 0.0, 0.0};  // max ratio at |u|_V = 0.1, 1, 10
};

/// Max over random interior fields of |C(u)+S(u)|_V' / |u|_V^2.
CNResult estimate_cN(const ReducedOps& ops, const StabilizationConfig& stab, int sample_count,
                     std::uint64_t seed);

/// tau(u) = min( (alpha/2) c_Theta^-2 (c_N |u| + c_L)^-2, tau_max2,
/// (2 c_Theta)^-1 ); positive, continuous, nonincreasing.
double compute_tau(double u_norm, const ConstantSet& consts);

/// Samples <A_h x, Phi x> / |x|^2 with fixed tau = min(c_T^-1,
/// alpha (c_Theta c_L)^-2) and Phi x = (u - tau Theta p, p).
CoercivityReport check_mapped_coercivity(const ReducedOps& ops, const ThetaOperator& theta,
                                         const ConstantSet& consts, int sample_count,
                                         std::uint64_t seed);

/// Discrete nonlinear system pieces used by the sign-condition checks
/// and the residual map.
struct NonlinearSystem {
  const ReducedOps* ops = nullptr;
  ProblemKind kind = ProblemKind::nse;
  StabilizationConfig stab;
  Eigen::VectorXd f_full;
  SparseMat oseen;  // used when kind == oseen

  Eigen::VectorXd residual_u(const Eigen::VectorXd& u, const Eigen::VectorXd& p) const;
  Eigen::VectorXd residual_p(const Eigen::VectorXd& u, const Eigen::VectorXd& p) const;
};

/// Riesz-preconditioned residual (M_V^-1 and M_Q^-1 applied blockwise);
/// vanishes exactly at discrete solutions.
SaddleState residual_map(const NonlinearSystem& sys, const SaddleState& x);

/// Samples x on spheres |x| = radius * r and evaluates the pairing
/// <A(x) - b, S Psi(x)> with S Psi(x) = (u - tau(u) Theta p, p).
CoercivityReport check_sign_condition(const NonlinearSystem& sys, const ThetaOperator& theta,
                                      const ConstantSet& consts,
                                      const std::vector<double>& radius_grid, int sample_count,
                                      std::uint64_t seed);

}  // namespace stabfem
