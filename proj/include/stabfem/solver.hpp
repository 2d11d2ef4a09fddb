#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>
#include <optional>

#include "stabfem/assembly.hpp"
#include "stabfem/stabilization.hpp"

namespace stabfem {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { stokes, gstokes, oseen, nse };
ProblemKind problem_from_string(const std::string& s);

using ScalarFn = std::function<double(double, double)>;
using VectorFn = std::function<Eigen::Vector2d(double, double)>;

struct ProblemSpec {
  ProblemKind kind = ProblemKind::stokes;
  double mu = 1.0;
  VectorFn force;                            // f, may be null (zero)
  ScalarFn div_data;                         // g for gstokes, may be null
  std::optional<Eigen::VectorXd> advection;  // discrete solenoidal b (oseen)
  StabilizationConfig stab;
  VectorFn dirichlet;  // boundary velocity, null means homogeneous
};

struct SaddleState {
  Eigen::VectorXd u;  // full velocity coefficients
  Eigen::VectorXd p;
  double lambda = 0.0;
};

struct SolveLog {
  std::vector<double> residuals;
  std::vector<double> damping;
  bool converged = false;
  int newton_steps = 0;
  double wall_seconds = 0.0;
  double u_vnorm = 0.0;
  double f_dual_norm = 0.0;
  bool energy_bound_ok = true;  // |u|_V <= mu^-1 |f|_V' + 1e-8 (homogeneous BC)
};

/// Interior restriction of the saddle blocks with factorizations of the
/// V- and Q-Gram matrices; shared by the solvers and the coercivity lab.
class ReducedOps {
 public:
  ReducedOps(const OperatorBlocks& blocks, const SparseMat& T);

  const OperatorBlocks& blocks() const { return *blocks_; }
  const SparseMat& T() const { return T_; }
  const FeSpaces& spaces() const { return *blocks_->spaces; }
  int ni() const { return static_cast<int>(ivdofs_.size()); }
  int nq() const { return blocks_->M_Q.rows(); }

  Eigen::VectorXd restrict_v(const Eigen::VectorXd& full) const;
  Eigen::VectorXd extend_v(const Eigen::VectorXd& reduced) const;
  SparseMat restrict_vv(const SparseMat& full) const;  // vdim x vdim -> ni x ni

  const SparseMat& L_ii() const { return L_ii_; }
  const SparseMat& Mv_ii() const { return Mv_ii_; }
  const SparseMat& B_i() const { return B_i_; }

  /// Riesz dual norm |f|_V' = sqrt(f^T Mv_ii^-1 f) on interior DOFs;
  /// optionally exposes the full-size representative.
  double riesz_dual_norm(const Eigen::VectorXd& f_full,
                         Eigen::VectorXd* representative = nullptr) const;

  Eigen::VectorXd solve_mv(const Eigen::VectorXd& rhs_reduced) const;
  Eigen::VectorXd solve_mq(const Eigen::VectorXd& rhs) const;

  double vnorm(const Eigen::VectorXd& u_full) const;
  double qnorm(const Eigen::VectorXd& p) const;

 private:
  const OperatorBlocks* blocks_;
  SparseMat T_;
  std::vector<int> ivdofs_;
  std::vector<int> full_to_reduced_;
  SparseMat L_ii_, Mv_ii_, B_i_;
  Eigen::SimplicialLLT<SparseMat> llt_mv_;
  Eigen::SimplicialLLT<SparseMat> llt_mq_;
};

/// Direct solve of [L -B^T; B T] with the zero-mean multiplier row
/// appended. f is a full-size velocity load, g a pressure load.
SaddleState solve_linear_saddle(const ReducedOps& ops, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& g,
                                const Eigen::VectorXd* boundary_values = nullptr);

std::pair<SaddleState, SolveLog> solve_nonlinear(const ProblemSpec& spec, const Mesh& mesh, int k);

/// Oseen convection matrix for a fixed discrete advection field b,
/// including the Temam term (1/2) u div b.
SparseMat oseen_matrix(const FeSpaces& spaces, const Eigen::VectorXd& b);

/// Interpolates a boundary function onto the boundary DOFs (zero on
/// interior DOFs).
Eigen::VectorXd boundary_interpolant(const FeSpaces& spaces, const VectorFn& g);

}  // namespace stabfem
