#include "stabfem/coercivity_lab.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace stabfem {

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform(), u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

void ConstantSet::derive_radii() {
  const double inf = std::numeric_limits<double>::infinity();
  tau_max1 = c_T > 0.0 ? 1.0 / c_T : inf;
  tau_max2 = std::min(tau_max1, 1.0 / (alpha * c_Theta * c_Theta));
  r1 = 4.0 / alpha * f_dual_norm;
  double cn_r1 = c_N * r1 + c_L;
  tau_max3 = std::min(alpha / (c_Theta * c_Theta * cn_r1 * cn_r1), tau_max2);
  r2 = r1 * std::sqrt(alpha / tau_max3);
  r = std::max(r1, r2);
}

double estimate_alpha(const ReducedOps& ops, int max_iters) {
  // Krylov-accelerated inverse iteration: M-orthogonal Lanczos on
  // L^-1 M, whose largest eigenvalue is 1/lambda_min(L, M). Plain power
  // steps stall when the lower end of the spectrum clusters.
  Eigen::SimplicialLLT<SparseMat> llt(ops.L_ii());
  if (llt.info() != Eigen::Success)
    throw SolverFailure("estimate_alpha: factorization of L failed");
  const SparseMat& M = ops.Mv_ii();
  int n = ops.ni();
  int m = std::min(n, max_iters);

  std::vector<Eigen::VectorXd> basis;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  v /= std::sqrt(v.dot(M * v));
  basis.push_back(v);
  std::vector<double> diag, offdiag;
  double prev_theta = 0.0;
  Eigen::VectorXd w;
  for (int j = 0; j < m; ++j) {
    w = llt.solve(M * basis[j]);
    double a = w.dot(M * basis[j]);
    diag.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= offdiag[j - 1] * basis[j - 1];
    for (const auto& q : basis) w -= (w.dot(M * q)) * q;  // full reorthogonalization

    int k = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = diag[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = offdiag[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    double theta = es.eigenvalues().maxCoeff();
    if (j > 2 && std::abs(theta - prev_theta) <= 1e-13 * std::abs(theta)) return 1.0 / theta;
    prev_theta = theta;

    double b = std::sqrt(std::max(w.dot(M * w), 0.0));
    if (b <= 1e-14) return 1.0 / theta;  // invariant subspace found
    offdiag.push_back(b);
    basis.push_back(w / b);
  }
  throw SolverFailure("estimate_alpha: inverse iteration did not converge");
}

Eigen::VectorXd ThetaOperator::apply(const Eigen::VectorXd& p, double* raw_schur) const {
  const ReducedOps& ops = *ops_;
  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  double pnorm = p.norm();
  if (pnorm > 0.0 && std::abs(m.dot(p)) > 1e-8 * pnorm)
    throw std::invalid_argument("ThetaOperator: pressure must have zero mean");

  Eigen::VectorXd bt = ops.B_i().transpose() * p;
  Eigen::VectorXd v = ops.solve_mv(bt);
  double s = bt.dot(v);
  if (raw_schur) *raw_schur = s;
  double pq2 = p.dot(ops.blocks().M_Q * p);
  double scale = s > 0.0 ? pq2 / s : 0.0;
  Eigen::VectorXd out = ops.extend_v(scale * v);
  double qn = std::sqrt(pq2);
  if (qn > 0.0) {
    double vn = ops.vnorm(out);
    if (vn / qn > c_theta_) c_theta_ = vn / qn;
  }
  return out;
}

namespace {

// Euclidean-orthonormal basis of {p : m.p = 0} via Householder QR of m.
Eigen::MatrixXd zero_mean_basis(const Eigen::VectorXd& m) {
  int n = static_cast<int>(m.size());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - 1);
}

Eigen::MatrixXd dense_schur(const ReducedOps& ops) {
  int nq = ops.nq();
  Eigen::MatrixXd Bt = Eigen::MatrixXd(ops.B_i().transpose());
  Eigen::MatrixXd S(nq, nq);
  for (int q = 0; q < nq; ++q) {
    Eigen::VectorXd col = ops.solve_mv(Bt.col(q));
    S.col(q) = Bt.transpose() * col;
  }
  return 0.5 * (S + S.transpose());
}

}  // namespace

InfSupResult estimate_infsup(const ReducedOps& ops, std::uint64_t seed, int extra_samples) {
  int nq = ops.nq();
  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  Eigen::MatrixXd S = dense_schur(ops);
  Eigen::MatrixXd T = Eigen::MatrixXd(ops.T());
  Eigen::MatrixXd Mq = Eigen::MatrixXd(ops.blocks().M_Q);
  Eigen::MatrixXd Z = zero_mean_basis(m);

  Eigen::MatrixXd A = Z.transpose() * (S + T) * Z;
  Eigen::MatrixXd Mz = Z.transpose() * Mq * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()),
                                                               0.5 * (Mz + Mz.transpose()));
  if (es.info() != Eigen::Success)
    throw SolverFailure("estimate_infsup: generalized eigensolve failed");

  InfSupResult out;
  out.eigenvalues = es.eigenvalues();
  out.eigenbasis = Z * es.eigenvectors();
  double lmin = out.eigenvalues.minCoeff();
  out.gamma_stab = lmin > 0.0 ? std::sqrt(lmin) : 0.0;

  // c_T on the eigenbasis plus random zero-mean samples
  auto ct_of = [&](const Eigen::VectorXd& p) -> double {
    double tpp = p.dot(T * p);
    double sp = p.dot(S * p);
    double num = 0.5 * p.dot(Mq * p) - sp;
    if (num <= 0.0) return 0.0;
    if (tpp <= 1e-14 * std::max(1.0, p.squaredNorm()))
      return std::numeric_limits<double>::infinity();
    return num / tpp;
  };
  double ct = 0.0;
  for (int i = 0; i < out.eigenbasis.cols(); ++i)
    ct = std::max(ct, ct_of(out.eigenbasis.col(i)));
  Rng rng(seed);
  for (int i = 0; i < extra_samples; ++i) {
    Eigen::VectorXd p = Z * rng.normal_vector(nq - 1);
    ct = std::max(ct, ct_of(p));
  }
  out.c_T = ct;
  return out;
}

namespace {

Eigen::VectorXd random_interior_field(const ReducedOps& ops, Rng& rng, double target_vnorm) {
  Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
  double n = ops.vnorm(u);
  if (n > 0.0) u *= target_vnorm / n;
  return u;
}

}  // namespace

CNResult estimate_cN(const ReducedOps& ops, const StabilizationConfig& stab, int sample_count,
                     std::uint64_t seed) {
  const FeSpaces& spaces = ops.spaces();
  Rng rng(seed);
  CNResult out;
  const double amplitudes[3] = {0.1, 1.0, 10.0};
  for (int s = 0; s < sample_count; ++s) {
    Eigen::VectorXd dir = ops.extend_v(rng.normal_vector(ops.ni()));
    double dn = ops.vnorm(dir);
    for (int a = 0; a < 3; ++a) {
      Eigen::VectorXd u = dir * (amplitudes[a] / dn);
      Eigen::VectorXd cu = convection_residual(spaces, u);
      if (stab.velocity_kind != VelocityStab::none)
        cu += velocity_stab_residual(spaces, stab, u);
      double ratio = ops.riesz_dual_norm(cu) / (amplitudes[a] * amplitudes[a]);
      out.per_amplitude[a] = std::max(out.per_amplitude[a], ratio);
      out.c_N = std::max(out.c_N, ratio);
    }
  }
  return out;
}

double compute_tau(double u_norm, const ConstantSet& consts) {
  if (consts.c_Theta <= 0.0)
    throw std::invalid_argument("compute_tau: c_Theta must be positive");
  if (consts.c_N <= 0.0 && consts.c_L <= 0.0)
    throw std::invalid_argument("compute_tau: c_N and c_L cannot both vanish");
  double denom = consts.c_N * u_norm + consts.c_L;
  double tau = 0.5 * consts.alpha / (consts.c_Theta * consts.c_Theta * denom * denom);
  tau = std::min(tau, consts.tau_max2);
  tau = std::min(tau, 0.5 / consts.c_Theta);
  return tau;
}

CoercivityReport check_mapped_coercivity(const ReducedOps& ops, const ThetaOperator& theta,
                                         const ConstantSet& consts, int sample_count,
                                         std::uint64_t seed) {
  CoercivityReport rep;
  rep.sample_count = sample_count;
  rep.seed = seed;

  double tau = consts.alpha / (consts.c_Theta * consts.c_Theta * consts.c_L * consts.c_L);
  if (consts.c_T > 0.0) tau = std::min(tau, 1.0 / consts.c_T);
  rep.tau = tau;

  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  Eigen::MatrixXd Z = zero_mean_basis(m);
  Rng rng(seed);
  double beta_min = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_count; ++s) {
    // unit-norm components, cycling pure-velocity / pure-pressure /
    // mixed states so neither block of the bound hides the other
    Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
    Eigen::VectorXd p = Z * rng.normal_vector(ops.nq() - 1);
    u /= ops.vnorm(u);
    p /= ops.qnorm(p);
    if (s % 3 == 0)
      p.setZero();
    else if (s % 3 == 1)
      u.setZero();
    Eigen::VectorXd ru = ops.blocks().L * u - ops.blocks().B.transpose() * p;
    Eigen::VectorXd rp = ops.blocks().B * u + ops.T() * p;
    Eigen::VectorXd w = u - tau * theta.apply(p);
    double value = ru.dot(w) + rp.dot(p);
    double un = ops.vnorm(u), pn = ops.qnorm(p);
    double ratio = value / (un * un + pn * pn);
    rep.margins.push_back(ratio);
    beta_min = std::min(beta_min, ratio);
  }
  rep.beta_min = beta_min;
  rep.verdict = beta_min > 0.0;
  return rep;
}

Eigen::VectorXd NonlinearSystem::residual_u(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& p) const {
  const OperatorBlocks& blocks = ops->blocks();
  Eigen::VectorXd ru = blocks.L * u - blocks.B.transpose() * p - f_full;
  if (kind == ProblemKind::oseen)
    ru += oseen * u;
  else if (kind == ProblemKind::nse)
    ru += convection_residual(ops->spaces(), u);
  if (stab.velocity_kind != VelocityStab::none)
    ru += velocity_stab_residual(ops->spaces(), stab, u);
  return ru;
}

Eigen::VectorXd NonlinearSystem::residual_p(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& p) const {
  return ops->blocks().B * u + ops->T() * p;
}

SaddleState residual_map(const NonlinearSystem& sys, const SaddleState& x) {
  const ReducedOps& ops = *sys.ops;
  Eigen::VectorXd ru = sys.residual_u(x.u, x.p);
  Eigen::VectorXd rp = sys.residual_p(x.u, x.p);
  SaddleState r;
  r.u = ops.extend_v(ops.solve_mv(ops.restrict_v(ru)));
  r.p = ops.solve_mq(rp);
  // project the pressure part back to zero mean
  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  r.p.array() -= m.dot(r.p) / m.sum();
  r.lambda = 0.0;
  return r;
}

CoercivityReport check_sign_condition(const NonlinearSystem& sys, const ThetaOperator& theta,
                                      const ConstantSet& consts,
                                      const std::vector<double>& radius_grid, int sample_count,
                                      std::uint64_t seed) {
  const ReducedOps& ops = *sys.ops;
  CoercivityReport rep;
  rep.sample_count = sample_count;
  rep.seed = seed;

  double fdual = consts.f_dual_norm;
  double r = consts.r > 0.0 ? consts.r : 1.0;  // f = 0 anchors the grid at |x| = 1
  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  Eigen::MatrixXd Z = zero_mean_basis(m);
  Rng rng(seed);
  bool ok = true;
  for (double rad : radius_grid) {
    double target = rad * r;
    rep.radii.push_back(target);
    for (int s = 0; s < sample_count; ++s) {
      Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
      Eigen::VectorXd p = Z * rng.normal_vector(ops.nq() - 1);
      double un = ops.vnorm(u), pn = ops.qnorm(p);
      double xn = std::sqrt(un * un + pn * pn);
      u *= target / xn;
      p *= target / xn;
      un = ops.vnorm(u);

      double tau = compute_tau(un, consts);
      Eigen::VectorXd w = u - tau * theta.apply(p);
      double margin = sys.residual_u(u, p).dot(w) + sys.residual_p(u, p).dot(p);
      rep.margins.push_back(margin);
      double xn2 = target * target;
      if (margin < -1e-8 * (1.0 + xn2) * std::max(1.0, fdual)) ok = false;
    }
  }
  rep.verdict = ok;
  return rep;
}

}  // namespace stabfem
