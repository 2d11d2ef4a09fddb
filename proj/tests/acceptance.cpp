// Acceptance gate: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Exercises the library end to end at desk scale.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "stabfem/coercivity_lab.hpp"
#include "stabfem/harness.hpp"

using namespace stabfem;

namespace {

int g_failures = 0;

void run_criterion(int idx, const char* label, const std::function<bool()>& body) {
  bool pass = false;
  std::string note;
  try {
    pass = body();
  } catch (const std::exception& e) {
    note = std::string(" (exception: ") + e.what() + ")";
  }
  std::printf("[%s] %2d %s%s\n", pass ? "PASS" : "FAIL", idx, label, note.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Lab {
  Mesh mesh;
  FeSpaces spaces;
  OperatorBlocks blocks;
  SparseMat T;
  std::unique_ptr<ReducedOps> ops;
};

Lab make_lab(int n, int k, double mu, PressureStab kind, bool macro = true) {
  Lab lab{build_unit_square_mesh(n, macro), {}, {}, {}, nullptr};
  lab.spaces = build_spaces(lab.mesh, k);
  lab.blocks = assemble_stokes_blocks(lab.spaces, mu);
  StabilizationConfig cfg;
  cfg.pressure_kind = kind;
  lab.T = assemble_pressure_stab(lab.spaces, cfg);
  lab.ops = std::make_unique<ReducedOps>(lab.blocks, lab.T);
  return lab;
}

Eigen::VectorXd zero_mean(const FeSpaces& s, Eigen::VectorXd p) {
  p.array() -= s.mean_vector.dot(p) / s.mean_vector.sum();
  return p;
}

void warm_theta(const ThetaOperator& theta, const FeSpaces& s, std::uint64_t seed, int count) {
  Rng rng(seed);
  for (int i = 0; i < count; ++i) theta.apply(zero_mean(s, rng.normal_vector(s.qdim())));
}

ConstantSet estimate_consts(const Lab& lab, const ThetaOperator& theta, double mu) {
  ConstantSet cs;
  cs.alpha = estimate_alpha(*lab.ops);
  cs.c_L = mu;
  cs.c_Theta = theta.c_theta();
  cs.c_T = estimate_infsup(*lab.ops).c_T;
  return cs;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

int main() {
  run_criterion(1, "coercivity constant of the viscous block equals the viscosity", [] {
    bool ok = true;
    for (double mu : {1.0, 0.01})
      for (int n : {4, 8}) {
        Lab lab = make_lab(n, 1, mu, PressureStab::bp);
        double a = estimate_alpha(*lab.ops);
        ok = ok && std::abs(a - mu) <= 1e-8 * mu;
      }
    return ok;
  });

  run_criterion(2, "pressure stabilization matrices are symmetric positive semidefinite", [] {
    bool ok = true;
    for (PressureStab kind : {PressureStab::bp, PressureStab::bh, PressureStab::lps})
      for (int n : {8, 16}) {
        Mesh mesh = build_unit_square_mesh(n, true);
        FeSpaces s = build_spaces(mesh, 1);
        StabilizationConfig cfg;
        cfg.pressure_kind = kind;
        SparseMat T = assemble_pressure_stab(s, cfg);
        Eigen::MatrixXd dense(T);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
        double tnorm = es.eigenvalues().cwiseAbs().maxCoeff();
        ok = ok && es.eigenvalues().minCoeff() >= -1e-10 * tnorm;
        Rng rng(101 + n + 10 * static_cast<int>(kind));
        for (int t = 0; t < 100; ++t) {
          Eigen::VectorXd p = rng.normal_vector(s.qdim());
          ok = ok && p.dot(T * p) >= -1e-12 * p.squaredNorm();
        }
      }
    return ok;
  });

  run_criterion(3, "convection is skew on interior fields; adding stabilization keeps it bounded below", [] {
    bool ok = true;
    for (int k : {1, 2}) {
      Lab lab = make_lab(8, k, 1.0, PressureStab::bp);
      Rng rng(211 + k);
      for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd u = lab.ops->extend_v(rng.normal_vector(lab.ops->ni()));
        u /= lab.ops->vnorm(u);
        ok = ok && std::abs(u.dot(convection_residual(lab.spaces, u))) <= 1e-10;
        for (VelocityStab vk : {VelocityStab::lps, VelocityStab::supg}) {
          StabilizationConfig cfg;
          cfg.velocity_kind = vk;
          Eigen::VectorXd cs = convection_residual(lab.spaces, u) +
                               velocity_stab_residual(lab.spaces, cfg, u);
          ok = ok && u.dot(cs) >= -1e-12;
        }
      }
    }
    return ok;
  });

  run_criterion(4, "convection bound is degree-2 homogeneous without stabilization, finite and reproducible with it", [] {
    Lab lab = make_lab(8, 1, 1.0, PressureStab::bp);
    StabilizationConfig none;
    CNResult base = estimate_cN(*lab.ops, none, 30, 307);
    double lo = std::min({base.per_amplitude[0], base.per_amplitude[1], base.per_amplitude[2]});
    double hi = std::max({base.per_amplitude[0], base.per_amplitude[1], base.per_amplitude[2]});
    bool ok = hi > 0.0 && (hi - lo) <= 0.05 * hi;
    for (VelocityStab vk : {VelocityStab::lps, VelocityStab::supg}) {
      StabilizationConfig cfg;
      cfg.velocity_kind = vk;
      CNResult a = estimate_cN(*lab.ops, cfg, 30, 311);
      CNResult b = estimate_cN(*lab.ops, cfg, 30, 311);
      ok = ok && std::isfinite(a.c_N) && a.c_N == b.c_N;
    }
    return ok;
  });

  run_criterion(5, "stabilized inf-sup constant is positive and level-uniform, and beats the raw pair", [] {
    bool ok = true;
    double gmin = 1e300, gmax = 0.0;
    for (int n : {8, 16, 32}) {
      Lab bp = make_lab(n, 1, 1.0, PressureStab::bp);
      Lab none = make_lab(n, 1, 1.0, PressureStab::none);
      double g_bp = estimate_infsup(*bp.ops).gamma_stab;
      double g_none = estimate_infsup(*none.ops).gamma_stab;
      ok = ok && g_bp > 0.0 && g_bp > g_none;
      gmin = std::min(gmin, g_bp);
      gmax = std::max(gmax, g_bp);
    }
    return ok && gmax / gmin <= 2.0;
  });

  run_criterion(6, "mapped coercivity holds on random samples and the velocity slice attains its floor", [] {
    bool ok = true;
    for (PressureStab kind : {PressureStab::bp, PressureStab::bh, PressureStab::lps}) {
      Lab lab = make_lab(8, 1, 1.0, kind);
      ThetaOperator theta(*lab.ops);
      warm_theta(theta, lab.spaces, 401 + static_cast<int>(kind), 50);
      ConstantSet cs = estimate_consts(lab, theta, 1.0);
      CoercivityReport rep = check_mapped_coercivity(*lab.ops, theta, cs, 200, 409);
      ok = ok && rep.verdict && rep.beta_min > 0.0;
      for (std::size_t i = 0; i < rep.margins.size(); i += 3)
        ok = ok && rep.margins[i] >= cs.alpha - 1e-10;
    }
    return ok;
  });

  run_criterion(7, "manufactured solutions converge at the expected orders", [] {
    StabilizationConfig cfg;
    cfg.pressure_kind = PressureStab::bp;
    bool ok = true;
    struct Run {
      const char* id;
      ProblemKind kind;
      double mu;
    };
    for (const Run& run : {Run{"stokes_trig", ProblemKind::stokes, 1.0},
                           Run{"nse_trig", ProblemKind::nse, 0.1}}) {
      ManufacturedCase mc = manufactured_solution(run.id);
      ConvergenceTable t = run_convergence(mc, run.kind, run.mu, cfg, 1, {8, 16, 32});
      ok = ok && t.complete && t.rows.size() == 3;
      if (!ok) break;
      const ConvergenceRow& last = t.rows.back();
      ok = ok && last.eoc_u_h1 >= 0.8 && last.eoc_u_h1 <= 1.2;
      ok = ok && last.eoc_u_l2 >= 1.6 && last.eoc_u_l2 <= 2.2;
      ok = ok && last.eoc_p_l2 >= 0.8;
    }
    return ok;
  });

  run_criterion(8, "converged flow solutions satisfy the a priori energy bound", [] {
    bool ok = true;
    ManufacturedCase mc = manufactured_solution("nse_trig");
    Mesh mesh = build_unit_square_mesh(16, true);
    for (double mu : {1.0, 0.1}) {
      ProblemSpec spec;
      spec.kind = ProblemKind::nse;
      spec.mu = mu;
      spec.force = mc.force(ProblemKind::nse, mu);
      spec.stab.pressure_kind = PressureStab::bp;
      auto [x, log] = solve_nonlinear(spec, mesh, 1);
      ok = ok && log.converged && log.energy_bound_ok &&
           log.u_vnorm <= log.f_dual_norm / mu + 1e-8;
    }
    return ok;
  });

  run_criterion(9, "nonlinear sign condition holds on spheres of the derived radii", [] {
    Lab lab = make_lab(8, 1, 1.0, PressureStab::bp);
    ManufacturedCase mc = manufactured_solution("nse_trig");
    ThetaOperator theta(*lab.ops);
    warm_theta(theta, lab.spaces, 503, 50);

    NonlinearSystem sys;
    sys.ops = lab.ops.get();
    sys.kind = ProblemKind::nse;
    sys.stab.pressure_kind = PressureStab::bp;
    sys.f_full = assemble_velocity_load(lab.spaces, mc.force(ProblemKind::nse, 1.0));

    ConstantSet cs = estimate_consts(lab, theta, 1.0);
    cs.c_N = estimate_cN(*lab.ops, sys.stab, 30, 509).c_N;
    cs.f_dual_norm = lab.ops->riesz_dual_norm(sys.f_full);
    cs.derive_radii();

    CoercivityReport rep = check_sign_condition(sys, theta, cs, {1.0, 2.0, 5.0, 10.0}, 100, 521);
    return cs.r > 0.0 && rep.verdict;
  });

  run_criterion(10, "regularized cavity converges quickly and its preconditioned residual vanishes", [] {
    Mesh mesh = build_unit_square_mesh(16, true);
    ProblemSpec spec;
    spec.kind = ProblemKind::nse;
    spec.mu = 0.05;
    spec.stab.pressure_kind = PressureStab::bp;
    spec.stab.velocity_kind = VelocityStab::supg;
    spec.dirichlet = cavity_lid_bc();
    auto [x, log] = solve_nonlinear(spec, mesh, 1);
    bool ok = log.converged && log.newton_steps <= 25 && !log.residuals.empty() &&
              log.residuals.back() <= 1e-8;

    FeSpaces spaces = build_spaces(mesh, 1);
    OperatorBlocks blocks = assemble_stokes_blocks(spaces, spec.mu);
    SparseMat T = assemble_pressure_stab(spaces, spec.stab);
    ReducedOps ops(blocks, T);
    NonlinearSystem sys;
    sys.ops = &ops;
    sys.kind = ProblemKind::nse;
    sys.stab = spec.stab;
    sys.f_full = Eigen::VectorXd::Zero(spaces.vdim());
    SaddleState r = residual_map(sys, x);
    double rnorm = std::hypot(ops.vnorm(r.u), ops.qnorm(r.p));
    return ok && rnorm <= 1e-8;
  });

  run_criterion(11, "diagnostic reports are byte-identical across repeated runs", [] {
    std::string base = std::string(STABFEM_CLI_PATH) +
                       " check --n 4 --k 1 --stab bp --samples 20 --seed 5 --no-timestamp --out ";
    int rc1 = std::system((base + "acceptance_check_a.json").c_str());
    int rc2 = std::system((base + "acceptance_check_b.json").c_str());
    std::string a = slurp("acceptance_check_a.json");
    std::string b = slurp("acceptance_check_b.json");
    std::remove("acceptance_check_a.json");
    std::remove("acceptance_check_b.json");
    return rc1 == 0 && rc2 == 0 && !a.empty() && a == b;
  });

  if (g_failures == 0) {
    std::printf("all %d criteria passed\n", 11);
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
