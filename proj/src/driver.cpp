#include "stabfem/driver.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

namespace stabfem {

using nlohmann::json;

namespace {

struct Config {
  ProblemKind problem = ProblemKind::stokes;
  double mu = 1.0;
  int n = 8;
  std::string mesh_path;
  int k = 1;
  StabilizationConfig stab;
  std::string case_id;
  std::vector<int> levels;
  int samples = 100;
  std::uint64_t seed = 1;
  std::vector<double> radius_grid = {1.0, 2.0, 5.0, 10.0};
  bool no_timestamp = false;
};

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  static const std::set<std::string> known = {
      "problem", "mu",      "n",    "mesh", "k",           "stab",        "vstab",
      "delta0_p", "delta0_v", "case", "levels", "samples", "seed", "radius_grid",
      "no_timestamp", "out"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");

  Config c;
  try {
    if (j.contains("problem")) c.problem = problem_from_string(j["problem"].get<std::string>());
    if (j.contains("mu")) c.mu = j["mu"].get<double>();
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("mesh")) c.mesh_path = j["mesh"].get<std::string>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("stab"))
      c.stab.pressure_kind = pressure_stab_from_string(j["stab"].get<std::string>());
    if (j.contains("vstab"))
      c.stab.velocity_kind = velocity_stab_from_string(j["vstab"].get<std::string>());
    if (j.contains("delta0_p")) c.stab.delta0_p = j["delta0_p"].get<double>();
    if (j.contains("delta0_v")) c.stab.delta0_v = j["delta0_v"].get<double>();
    if (j.contains("case")) c.case_id = j["case"].get<std::string>();
    if (j.contains("levels")) c.levels = j["levels"].get<std::vector<int>>();
    if (j.contains("samples")) c.samples = j["samples"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("radius_grid")) c.radius_grid = j["radius_grid"].get<std::vector<double>>();
    if (j.contains("no_timestamp")) c.no_timestamp = j["no_timestamp"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value type: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (c.mu <= 0.0) throw ConfigError("config: mu must be positive");
  if (c.n < 1) throw ConfigError("config: n must be >= 1");
  if (c.k != 1 && c.k != 2) throw ConfigError("config: k must be 1 or 2");
  if (c.samples < 1) throw ConfigError("config: samples must be >= 1");
  if (c.stab.delta0_p < 0.0 || c.stab.delta0_v < 0.0)
    throw ConfigError("config: delta0 must be nonnegative");
  return c;
}

bool needs_macro(const Config& c) {
  return c.stab.pressure_kind == PressureStab::lps || c.stab.velocity_kind == VelocityStab::lps;
}

Mesh make_mesh(const Config& c) {
  if (!c.mesh_path.empty()) {
    std::ifstream in(c.mesh_path);
    if (!in) throw ConfigError("config: cannot open mesh file '" + c.mesh_path + "'");
    return parse_mesh(in);
  }
  return build_unit_square_mesh(c.n, needs_macro(c));
}

void stamp(json& j, const Config& c) {
  j["schema"] = 1;
  if (!c.no_timestamp) {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  }
}

ProblemSpec make_problem(const Config& c, const Mesh& mesh, int kdeg) {
  ProblemSpec spec;
  spec.kind = c.problem;
  spec.mu = c.mu;
  spec.stab = c.stab;
  if (c.case_id == "cavity") {
    spec.dirichlet = cavity_lid_bc();
  } else if (!c.case_id.empty()) {
    ManufacturedCase mc = manufactured_solution(c.case_id);
    spec.force = mc.force(c.problem, c.mu);
    if (mc.div_u && c.problem == ProblemKind::gstokes) spec.div_data = mc.div_u;
  }
  if (c.problem == ProblemKind::oseen) {
    // default demo advection: rigid rotation, pointwise divergence-free
    FeSpaces spaces = build_spaces(mesh, kdeg);
    Eigen::VectorXd b(spaces.vdim());
    for (int n = 0; n < spaces.num_nodes; ++n) {
      b[2 * n] = -(spaces.nodes[n].y - 0.5);
      b[2 * n + 1] = spaces.nodes[n].x - 0.5;
    }
    spec.advection = b;
  }
  return spec;
}

struct LabSetup {
  Mesh mesh;
  FeSpaces spaces;
  OperatorBlocks blocks;
  SparseMat T;
  std::unique_ptr<ReducedOps> ops;
  std::unique_ptr<ThetaOperator> theta;
  InfSupResult infsup;
  ConstantSet consts;
};

// Assembles the linear pieces and estimates the framework constants on
// the inf-sup eigenbasis plus random pressures.
LabSetup make_lab(const Config& c, bool with_cN) {
  LabSetup lab{make_mesh(c), {}, {}, {}, nullptr, nullptr, {}, {}};
  lab.spaces = build_spaces(lab.mesh, c.k);
  validate_config(lab.spaces, c.stab);
  lab.blocks = assemble_stokes_blocks(lab.spaces, c.mu);
  lab.T = assemble_pressure_stab(lab.spaces, c.stab);
  lab.ops = std::make_unique<ReducedOps>(lab.blocks, lab.T);
  lab.theta = std::make_unique<ThetaOperator>(*lab.ops);
  lab.infsup = estimate_infsup(*lab.ops, c.seed);
  // c_Theta sampled on random zero-mean pressures; the raw Schur form is
  // singular on checkerboard modes, so the eigenbasis itself would give
  // an unusable (effectively infinite) norm estimate.
  {
    Rng rng(c.seed ^ 0x9e3779b97f4a7c15ull);
    const Eigen::VectorXd& m = lab.spaces.mean_vector;
    int nsamp = std::max(c.samples, 50);
    for (int s = 0; s < nsamp; ++s) {
      Eigen::VectorXd p = rng.normal_vector(lab.ops->nq());
      p.array() -= m.dot(p) / m.sum();
      lab.theta->apply(p);
    }
  }
  lab.consts.alpha = estimate_alpha(*lab.ops);
  lab.consts.c_L = c.mu;
  lab.consts.c_T = lab.infsup.c_T;
  lab.consts.c_Theta = lab.theta->c_theta();
  if (with_cN) {
    CNResult cn = estimate_cN(*lab.ops, c.stab, std::min(c.samples, 50), c.seed);
    lab.consts.c_N = cn.c_N;
  }
  return lab;
}

json solve_cmd(const Config& c) {
  Mesh mesh = make_mesh(c);
  ProblemSpec spec = make_problem(c, mesh, c.k);
  auto [x, log] = solve_nonlinear(spec, mesh, c.k);
  json j;
  stamp(j, c);
  j["converged"] = log.converged;
  j["newton_steps"] = log.newton_steps;
  j["residuals"] = log.residuals;
  j["damping"] = log.damping;
  j["u_vnorm"] = log.u_vnorm;
  j["f_dual_norm"] = log.f_dual_norm;
  j["energy_bound_ok"] = log.energy_bound_ok;
  j["u"] = std::vector<double>(x.u.data(), x.u.data() + x.u.size());
  j["p"] = std::vector<double>(x.p.data(), x.p.data() + x.p.size());
  j["lambda"] = x.lambda;
  if (!c.no_timestamp) j["wall_seconds"] = log.wall_seconds;
  return j;
}

json infsup_cmd(const Config& c, int& status) {
  LabSetup lab = make_lab(c, false);
  json j;
  stamp(j, c);
  j["gamma_stab"] = lab.infsup.gamma_stab;
  j["c_T"] = std::isinf(lab.infsup.c_T) ? json("inf") : json(lab.infsup.c_T);
  j["c_Theta"] = lab.consts.c_Theta;
  j["alpha"] = lab.consts.alpha;
  j["verdict"] = lab.infsup.gamma_stab > 0.0 && !std::isinf(lab.infsup.c_T);
  if (!j["verdict"].get<bool>()) status = 1;
  return j;
}

json coercivity_cmd(const Config& c, int& status) {
  LabSetup lab = make_lab(c, false);
  CoercivityReport rep =
      check_mapped_coercivity(*lab.ops, *lab.theta, lab.consts, c.samples, c.seed);
  json j;
  stamp(j, c);
  j["gamma_stab"] = lab.infsup.gamma_stab;
  j["tau"] = rep.tau;
  j["beta_min"] = rep.beta_min;
  j["sample_count"] = rep.sample_count;
  j["seed"] = rep.seed;
  j["margins"] = rep.margins;
  j["verdict"] = rep.verdict;
  if (!rep.verdict) status = 1;
  return j;
}

json signcheck_cmd(const Config& c, int& status) {
  Config cc = c;
  if (cc.case_id.empty()) cc.case_id = "nse_trig";
  LabSetup lab = make_lab(cc, true);

  NonlinearSystem sys;
  sys.ops = lab.ops.get();
  sys.kind = cc.problem == ProblemKind::oseen ? ProblemKind::oseen : ProblemKind::nse;
  sys.stab = cc.stab;
  ManufacturedCase mc = manufactured_solution(cc.case_id);
  sys.f_full = assemble_velocity_load(lab.spaces, mc.force(sys.kind, cc.mu));
  if (sys.kind == ProblemKind::oseen) {
    ProblemSpec spec = make_problem(cc, lab.mesh, cc.k);
    sys.oseen = oseen_matrix(lab.spaces, *spec.advection);
  }

  lab.consts.f_dual_norm = lab.ops->riesz_dual_norm(sys.f_full);
  lab.consts.derive_radii();
  CoercivityReport rep = check_sign_condition(sys, *lab.theta, lab.consts, cc.radius_grid,
                                              cc.samples, cc.seed);
  json j;
  stamp(j, cc);
  j["alpha"] = lab.consts.alpha;
  j["c_Theta"] = lab.consts.c_Theta;
  j["c_N"] = lab.consts.c_N;
  j["c_T"] = std::isinf(lab.consts.c_T) ? json("inf") : json(lab.consts.c_T);
  j["f_dual_norm"] = lab.consts.f_dual_norm;
  j["tau_max1"] = std::isinf(lab.consts.tau_max1) ? json("inf") : json(lab.consts.tau_max1);
  j["tau_max2"] = lab.consts.tau_max2;
  j["tau_max3"] = lab.consts.tau_max3;
  j["r1"] = lab.consts.r1;
  j["r2"] = lab.consts.r2;
  j["r"] = lab.consts.r;
  j["radii"] = rep.radii;
  j["margins"] = rep.margins;
  j["min_margin"] = rep.margins.empty()
                        ? 0.0
                        : *std::min_element(rep.margins.begin(), rep.margins.end());
  j["sample_count"] = rep.sample_count;
  j["seed"] = rep.seed;
  j["verdict"] = rep.verdict;
  if (!rep.verdict) status = 1;
  return j;
}

RunResult convergence_cmd(const Config& c) {
  if (c.levels.size() < 2) throw ConfigError("config: convergence requires >= 2 levels");
  std::string id = c.case_id.empty() ? "stokes_trig" : c.case_id;
  ManufacturedCase mc = manufactured_solution(id);
  ProblemKind kind = c.problem;
  if (id == "nse_trig") kind = ProblemKind::nse;
  if (id == "gstokes_div" && kind == ProblemKind::stokes) kind = ProblemKind::gstokes;
  ConvergenceTable table = run_convergence(mc, kind, c.mu, c.stab, c.k, c.levels);
  RunResult rr;
  rr.output = table.to_csv();
  rr.is_csv = true;
  rr.status = table.complete ? 0 : 1;
  return rr;
}

json check_cmd(const Config& c, int& status) {
  LabSetup lab = make_lab(c, true);
  const ReducedOps& ops = *lab.ops;
  json items = json::array();
  auto add = [&](const std::string& name, bool pass, double value) {
    items.push_back({{"name", name}, {"pass", pass}, {"value", value}});
    if (!pass) status = 1;
  };

  // (A1): smallest eigenvalue of (L, M_V) equals mu
  double alpha = lab.consts.alpha;
  add("alpha_anchor", std::abs(alpha - c.mu) <= 1e-8 * c.mu, alpha);

  // (A2a): T symmetric PSD
  {
    Eigen::MatrixXd Td = Eigen::MatrixXd(lab.T);
    double tnorm = Td.cwiseAbs().maxCoeff();
    double lmin = 0.0;
    if (tnorm > 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Td + Td.transpose()));
      lmin = es.eigenvalues().minCoeff();
    }
    bool pass = lmin >= -1e-10 * std::max(tnorm, 1e-300);
    Rng rng(c.seed);
    for (int s = 0; s < 100 && pass; ++s) {
      Eigen::VectorXd p = rng.normal_vector(ops.nq());
      if (p.dot(lab.T * p) < -1e-12 * p.squaredNorm()) pass = false;
    }
    add("a2a_psd", pass, lmin);
  }

  // (A3): skew symmetry of the convective term
  {
    Rng rng(c.seed + 1);
    bool pass = true;
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
      double un = ops.vnorm(u);
      double cu = convection_residual(lab.spaces, u).dot(u);
      double scale = std::max(1.0, un * un * un);
      worst = std::max(worst, std::abs(cu) / scale);
      if (std::abs(cu) > 1e-10 * scale) pass = false;
      if (c.stab.velocity_kind != VelocityStab::none) {
        double su = velocity_stab_residual(lab.spaces, c.stab, u).dot(u);
        if (cu + su < -1e-12 * scale) pass = false;
      }
    }
    add("a3_skew", pass, worst);
  }

  // (A4): quadratic homogeneity of the dual-norm ratio
  {
    CNResult cn = estimate_cN(ops, c.stab, 20, c.seed + 2);
    bool pass = std::isfinite(cn.c_N) && cn.c_N > 0.0;
    if (c.stab.velocity_kind == VelocityStab::none) {
      double lo = std::min({cn.per_amplitude[0], cn.per_amplitude[1], cn.per_amplitude[2]});
      double hi = std::max({cn.per_amplitude[0], cn.per_amplitude[1], cn.per_amplitude[2]});
      pass = pass && (hi - lo) <= 0.05 * hi;
    }
    add("a4_quadratic_growth", pass, cn.c_N);
  }

  // stabilized inf-sup constant positive
  add("infsup_positive", lab.infsup.gamma_stab > 0.0, lab.infsup.gamma_stab);

  // linear mapped coercivity
  {
    CoercivityReport rep = check_mapped_coercivity(ops, *lab.theta, lab.consts, 50, c.seed + 3);
    add("mapped_coercivity", rep.verdict, rep.beta_min);
  }

  // Phi surjectivity witness: Phi(u + tau Theta p, p) = (u, p)
  {
    Rng rng(c.seed + 4);
    double tau = 0.5 / std::max(lab.consts.c_Theta, 1e-300);
    const Eigen::VectorXd& m = lab.spaces.mean_vector;
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
      Eigen::VectorXd p = rng.normal_vector(ops.nq());
      p.array() -= m.dot(p) / m.sum();
      Eigen::VectorXd tp = lab.theta->apply(p);
      Eigen::VectorXd w = u + tau * tp;
      Eigen::VectorXd back = w - tau * tp;
      double err = ops.vnorm(back - u) / std::max(1.0, ops.vnorm(u));
      worst = std::max(worst, err);
    }
    add("phi_surjective", worst <= 1e-10, worst);
  }

  // <Psi(x), x> >= 1/4 |x|^2 with tau(u) <= (2 c_Theta)^-1
  {
    ConstantSet cs = lab.consts;
    if (cs.c_N <= 0.0) cs.c_N = 1.0;
    cs.f_dual_norm = 1.0;
    cs.derive_radii();
    Rng rng(c.seed + 5);
    const Eigen::VectorXd& m = lab.spaces.mean_vector;
    bool pass = true;
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd u = ops.extend_v(rng.normal_vector(ops.ni()));
      Eigen::VectorXd p = rng.normal_vector(ops.nq());
      p.array() -= m.dot(p) / m.sum();
      double un = ops.vnorm(u), pn = ops.qnorm(p);
      double tau = compute_tau(un, cs);
      Eigen::VectorXd w = u - tau * lab.theta->apply(p);
      double pairing = (ops.blocks().M_V * w).dot(u) + (ops.blocks().M_Q * p).dot(p);
      double bound = 0.25 * (un * un + pn * pn) - 1e-10;
      worst = std::min(worst, pairing - bound);
      if (pairing < bound) pass = false;
    }
    add("psi_coercive", pass, worst);
  }

  json j;
  stamp(j, c);
  j["checks"] = items;
  j["verdict"] = status == 0;
  return j;
}

}  // namespace

RunResult run_command(const std::string& subcommand, const std::string& config_json) {
  Config c = parse_config(config_json);
  RunResult rr;
  if (subcommand == "solve") {
    rr.output = solve_cmd(c).dump(2) + "\n";
  } else if (subcommand == "infsup") {
    json j = infsup_cmd(c, rr.status);
    rr.output = j.dump(2) + "\n";
  } else if (subcommand == "coercivity") {
    json j = coercivity_cmd(c, rr.status);
    rr.output = j.dump(2) + "\n";
  } else if (subcommand == "signcheck") {
    json j = signcheck_cmd(c, rr.status);
    rr.output = j.dump(2) + "\n";
  } else if (subcommand == "convergence") {
    rr = convergence_cmd(c);
  } else if (subcommand == "check") {
    json j = check_cmd(c, rr.status);
    rr.output = j.dump(2) + "\n";
  } else {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  return rr;
}

}  // namespace stabfem
