#include "stabfem/solver.hpp"

#include <chrono>
#include <cmath>

namespace stabfem {

ProblemKind problem_from_string(const std::string& s) {
  if (s == "stokes") return ProblemKind::stokes;
  if (s == "gstokes") return ProblemKind::gstokes;
  if (s == "oseen") return ProblemKind::oseen;
  if (s == "nse") return ProblemKind::nse;
  throw std::invalid_argument("unknown problem '" + s + "'");
}

namespace {

SparseMat submatrix(const SparseMat& m, const std::vector<int>& row_map, int nrows,
                    const std::vector<int>& col_map, int ncols) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMat::InnerIterator it(m, k); it; ++it) {
      int r = row_map.empty() ? static_cast<int>(it.row()) : row_map[it.row()];
      int c = col_map.empty() ? static_cast<int>(it.col()) : col_map[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  SparseMat out(nrows, ncols);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

ReducedOps::ReducedOps(const OperatorBlocks& blocks, const SparseMat& T)
    : blocks_(&blocks), T_(T) {
  const FeSpaces& s = *blocks.spaces;
  ivdofs_ = s.interior_vdofs;
  full_to_reduced_.assign(s.vdim(), -1);
  for (std::size_t i = 0; i < ivdofs_.size(); ++i) full_to_reduced_[ivdofs_[i]] = static_cast<int>(i);

  L_ii_ = submatrix(blocks.L, full_to_reduced_, ni(), full_to_reduced_, ni());
  Mv_ii_ = submatrix(blocks.M_V, full_to_reduced_, ni(), full_to_reduced_, ni());
  B_i_ = submatrix(blocks.B, {}, nq(), full_to_reduced_, ni());
  llt_mv_.compute(Mv_ii_);
  if (llt_mv_.info() != Eigen::Success)
    throw SolverFailure("ReducedOps: factorization of interior V-Gram failed");
  llt_mq_.compute(blocks.M_Q);
  if (llt_mq_.info() != Eigen::Success)
    throw SolverFailure("ReducedOps: factorization of pressure mass failed");
}

Eigen::VectorXd ReducedOps::restrict_v(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(ni());
  for (int i = 0; i < ni(); ++i) out[i] = full[ivdofs_[i]];
  return out;
}

Eigen::VectorXd ReducedOps::extend_v(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spaces().vdim());
  for (int i = 0; i < ni(); ++i) out[ivdofs_[i]] = reduced[i];
  return out;
}

SparseMat ReducedOps::restrict_vv(const SparseMat& full) const {
  return submatrix(full, full_to_reduced_, ni(), full_to_reduced_, ni());
}

double ReducedOps::riesz_dual_norm(const Eigen::VectorXd& f_full,
                                   Eigen::VectorXd* representative) const {
  Eigen::VectorXd fr = f_full.size() == ni() ? f_full : restrict_v(f_full);
  Eigen::VectorXd w = llt_mv_.solve(fr);
  if (representative) *representative = extend_v(w);
  double v = fr.dot(w);
  return std::sqrt(std::max(v, 0.0));
}

Eigen::VectorXd ReducedOps::solve_mv(const Eigen::VectorXd& rhs) const {
  return llt_mv_.solve(rhs);
}

Eigen::VectorXd ReducedOps::solve_mq(const Eigen::VectorXd& rhs) const {
  return llt_mq_.solve(rhs);
}

double ReducedOps::vnorm(const Eigen::VectorXd& u_full) const {
  return std::sqrt(std::max(u_full.dot(blocks_->M_V * u_full), 0.0));
}

double ReducedOps::qnorm(const Eigen::VectorXd& p) const {
  return std::sqrt(std::max(p.dot(blocks_->M_Q * p), 0.0));
}

namespace {

// Assembles the bordered system [A -B^T 0; B T m; 0 m^T 0] from reduced
// blocks; A is the velocity block restricted to interior DOFs.
SparseMat bordered_system(const ReducedOps& ops, const SparseMat& A_ii) {
  int ni = ops.ni(), nq = ops.nq();
  int n = ni + nq + 1;
  const Eigen::VectorXd& m = ops.spaces().mean_vector;
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A_ii.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A_ii, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  const SparseMat& B = ops.B_i();
  for (int k = 0; k < B.outerSize(); ++k)
    for (SparseMat::InnerIterator it(B, k); it; ++it) {
      trip.emplace_back(ni + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), ni + it.row(), -it.value());
    }
  const SparseMat& T = ops.T();
  for (int k = 0; k < T.outerSize(); ++k)
    for (SparseMat::InnerIterator it(T, k); it; ++it)
      trip.emplace_back(ni + it.row(), ni + it.col(), it.value());
  for (int q = 0; q < nq; ++q) {
    trip.emplace_back(ni + q, ni + nq, m[q]);
    trip.emplace_back(ni + nq, ni + q, m[q]);
  }
  SparseMat S(n, n);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

struct BorderedSolve {
  Eigen::SparseLU<SparseMat> lu;
  bool ok = false;
  std::string message;

  void factor(const SparseMat& S) {
    lu.compute(S);
    ok = lu.info() == Eigen::Success;
    if (!ok)
      message = "saddle system factorization failed (singular or near-singular; "
                "an unstabilized equal-order pair admits spurious pressure modes)";
  }
};

}  // namespace

SaddleState solve_linear_saddle(const ReducedOps& ops, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& g,
                                const Eigen::VectorXd* boundary_values) {
  int ni = ops.ni(), nq = ops.nq();
  const OperatorBlocks& blocks = ops.blocks();

  Eigen::VectorXd fr = ops.restrict_v(f);
  Eigen::VectorXd gr = g.size() ? g : Eigen::VectorXd::Zero(nq);
  if (boundary_values) {
    // lifting: move known boundary DOF contributions to the right-hand side
    Eigen::VectorXd lf = blocks.L * (*boundary_values);
    fr -= ops.restrict_v(lf);
    gr -= blocks.B * (*boundary_values);
  }

  SparseMat S = bordered_system(ops, ops.L_ii());
  BorderedSolve bs;
  bs.factor(S);
  if (!bs.ok) throw SolverFailure(bs.message);

  Eigen::VectorXd rhs(ni + nq + 1);
  rhs << fr, gr, 0.0;
  Eigen::VectorXd sol = bs.lu.solve(rhs);
  double rel = (S * sol - rhs).norm() / std::max(1.0, rhs.norm());
  if (rel > 1e-10)
    throw SolverFailure("saddle solve residual " + std::to_string(rel) + " exceeds tolerance");

  SaddleState x;
  x.u = ops.extend_v(sol.head(ni));
  if (boundary_values) x.u += *boundary_values;
  x.p = sol.segment(ni, nq);
  x.lambda = sol[ni + nq];
  return x;
}

SparseMat oseen_matrix(const FeSpaces& spaces, const Eigen::VectorXd& b) {
  if (b.size() != spaces.vdim())
    throw std::invalid_argument("oseen_matrix: advection field size mismatch");
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> vals(nb);
  double ref[6][2];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nb, nb);
    for (const auto& qp : spaces.quad.points) {
      eval_basis(spaces.degree, qp.x, qp.y, vals.data(), ref);
      double grads[6][2];
      for (int i = 0; i < nb; ++i) {
        grads[i][0] = g.inv_t[0][0] * ref[i][0] + g.inv_t[0][1] * ref[i][1];
        grads[i][1] = g.inv_t[1][0] * ref[i][0] + g.inv_t[1][1] * ref[i][1];
      }
      double w = qp.w * 2.0 * g.area;
      Eigen::Vector2d bv = Eigen::Vector2d::Zero();
      double divb = 0.0;
      for (int i = 0; i < nb; ++i) {
        int n = spaces.cell_nodes[c][i];
        bv[0] += b[2 * n] * vals[i];
        bv[1] += b[2 * n + 1] * vals[i];
        divb += b[2 * n] * grads[i][0] + b[2 * n + 1] * grads[i][1];
      }
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          double bdg = bv[0] * grads[j][0] + bv[1] * grads[j][1];
          local(i, j) += w * vals[i] * (bdg + 0.5 * divb * vals[j]);
        }
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        for (int a = 0; a < 2; ++a)
          trip.emplace_back(2 * spaces.cell_nodes[c][i] + a, 2 * spaces.cell_nodes[c][j] + a,
                            local(i, j));
  }
  SparseMat M(spaces.vdim(), spaces.vdim());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd boundary_interpolant(const FeSpaces& spaces, const VectorFn& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spaces.vdim());
  if (!g) return out;
  for (int n = 0; n < spaces.num_nodes; ++n)
    if (spaces.node_on_boundary[n]) {
      Eigen::Vector2d v = g(spaces.nodes[n].x, spaces.nodes[n].y);
      out[2 * n] = v[0];
      out[2 * n + 1] = v[1];
    }
  return out;
}

namespace {

struct NonlinearContext {
  const FeSpaces* spaces;
  const ProblemSpec* spec;
  const ReducedOps* ops;
  Eigen::VectorXd f_full;
  Eigen::VectorXd g_q;
  SparseMat oseen;  // empty unless kind == oseen
  bool linear_in_u = false;

  Eigen::VectorXd residual(const SaddleState& x) const {
    const OperatorBlocks& blocks = ops->blocks();
    Eigen::VectorXd ru = blocks.L * x.u - f_full;
    ru -= blocks.B.transpose() * x.p;
    if (spec->kind == ProblemKind::oseen)
      ru += oseen * x.u;
    else if (spec->kind == ProblemKind::nse)
      ru += convection_residual(*spaces, x.u);
    if (spec->stab.velocity_kind != VelocityStab::none)
      ru += velocity_stab_residual(*spaces, spec->stab, x.u);

    Eigen::VectorXd rp = blocks.B * x.u + ops->T() * x.p - g_q;
    rp += x.lambda * spaces->mean_vector;

    Eigen::VectorXd r(ops->ni() + ops->nq() + 1);
    r << ops->restrict_v(ru), rp, spaces->mean_vector.dot(x.p);
    return r;
  }

  SparseMat jacobian_velocity_block(const SaddleState& x) const {
    SparseMat A = ops->blocks().L;
    if (spec->kind == ProblemKind::oseen)
      A = A + oseen;
    else if (spec->kind == ProblemKind::nse)
      A = A + convection_jacobian(*spaces, x.u);
    if (spec->stab.velocity_kind != VelocityStab::none)
      A = A + velocity_stab_jacobian(*spaces, spec->stab, x.u);
    return ops->restrict_vv(A);
  }
};

}  // namespace

std::pair<SaddleState, SolveLog> solve_nonlinear(const ProblemSpec& spec, const Mesh& mesh, int k) {
  auto t0 = std::chrono::steady_clock::now();
  if (spec.mu <= 0.0) throw std::invalid_argument("solve_nonlinear: mu must be positive");

  FeSpaces spaces = build_spaces(mesh, k);
  validate_config(spaces, spec.stab);
  OperatorBlocks blocks = assemble_stokes_blocks(spaces, spec.mu);
  SparseMat T = assemble_pressure_stab(spaces, spec.stab);
  ReducedOps ops(blocks, T);

  NonlinearContext ctx;
  ctx.spaces = &spaces;
  ctx.spec = &spec;
  ctx.ops = &ops;
  ctx.f_full = spec.force ? assemble_velocity_load(spaces, spec.force)
                          : Eigen::VectorXd::Zero(spaces.vdim());
  ctx.g_q = spec.div_data ? assemble_pressure_load(spaces, spec.div_data)
                          : Eigen::VectorXd::Zero(spaces.qdim());
  if (spec.kind == ProblemKind::oseen) {
    if (!spec.advection) throw std::invalid_argument("oseen requires an advection field");
    Eigen::VectorXd divb = blocks.B * (*spec.advection);
    if (divb.norm() > 1e-10 * std::max(1.0, spec.advection->norm()))
      throw std::invalid_argument("oseen: advection field is not discretely solenoidal");
    ctx.oseen = oseen_matrix(spaces, *spec.advection);
    ctx.linear_in_u = spec.stab.velocity_kind == VelocityStab::none;
  }

  Eigen::VectorXd lift = boundary_interpolant(spaces, spec.dirichlet);
  bool homogeneous = !spec.dirichlet;

  // initial guess: Stokes solution of the same data
  SaddleState x = solve_linear_saddle(ops, ctx.f_full, ctx.g_q, homogeneous ? nullptr : &lift);

  SolveLog log;
  double fscale = std::max(1.0, ctx.f_full.norm());
  double tol = 1e-8 * fscale;

  Eigen::VectorXd r = ctx.residual(x);
  log.residuals.push_back(r.norm());

  const int max_newton = 50;
  for (int it = 0; it < max_newton && r.norm() > tol; ++it) {
    SparseMat A_ii = ctx.jacobian_velocity_block(x);
    SparseMat S = bordered_system(ops, A_ii);
    Eigen::SparseLU<SparseMat> lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success)
      throw SolverFailure("Newton linear subsolve failed at iteration " + std::to_string(it));
    Eigen::VectorXd step = lu.solve(-r);

    double base = r.norm();
    bool accepted = false;
    double factor = 1.0;
    SaddleState trial = x;
    for (int bt = 0; bt <= 10; ++bt, factor *= 0.5) {
      trial.u = x.u + factor * ops.extend_v(step.head(ops.ni()));
      trial.p = x.p + factor * step.segment(ops.ni(), ops.nq());
      trial.lambda = x.lambda + factor * step[ops.ni() + ops.nq()];
      Eigen::VectorXd rt = ctx.residual(trial);
      if (rt.norm() < base) {
        x = trial;
        r = rt;
        accepted = true;
        log.damping.push_back(factor);
        break;
      }
    }
    log.residuals.push_back(r.norm());
    ++log.newton_steps;
    if (!accepted) break;  // stalled: return last iterate flagged not-converged
  }
  log.converged = r.norm() <= tol;

  // zero-mean normalization of the pressure
  double pm = spaces.mean_vector.dot(x.p) / spaces.mean_vector.sum();
  x.p.array() -= pm;

  log.u_vnorm = ops.vnorm(x.u);
  log.f_dual_norm = ops.riesz_dual_norm(ctx.f_full);
  if (homogeneous && log.converged)
    log.energy_bound_ok = log.u_vnorm <= log.f_dual_norm / spec.mu + 1e-8;

  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {x, log};
}

}  // namespace stabfem
