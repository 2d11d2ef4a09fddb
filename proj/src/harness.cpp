#include "stabfem/harness.hpp"

#include <cmath>
#include <sstream>

namespace stabfem {

VectorFn ManufacturedCase::force(ProblemKind kind, double mu) const {
  auto uf = u;
  auto gu = grad_u;
  auto lap = laplace_u;
  auto gp = grad_p;
  auto dv = div_u;
  bool convective = kind == ProblemKind::nse;
  return [=](double x, double y) {
    Eigen::Vector2d f = -mu * lap(x, y) + gp(x, y);
    if (convective) {
      Eigen::Vector2d uv = uf(x, y);
      Eigen::Matrix2d g = gu(x, y);
      f += g * uv;
      if (dv) f += 0.5 * dv(x, y) * uv;
    }
    return f;
  };
}

ManufacturedCase manufactured_solution(const std::string& id) {
  const double pi = M_PI;
  if (id == "stokes_trig" || id == "nse_trig") {
    // u = curl of psi = sin^2(pi x) sin^2(pi y), p = sin(pi x) cos(pi y)
    ManufacturedCase mc;
    mc.id = id;
    mc.u = [pi](double x, double y) {
      double s2x = std::sin(pi * x) * std::sin(pi * x);
      double s2y = std::sin(pi * y) * std::sin(pi * y);
      return Eigen::Vector2d(pi * s2x * std::sin(2.0 * pi * y),
                             -pi * std::sin(2.0 * pi * x) * s2y);
    };
    mc.grad_u = [pi](double x, double y) {
      double s2x = std::sin(pi * x) * std::sin(pi * x);
      double s2y = std::sin(pi * y) * std::sin(pi * y);
      double s2px = std::sin(2.0 * pi * x), s2py = std::sin(2.0 * pi * y);
      double c2px = std::cos(2.0 * pi * x), c2py = std::cos(2.0 * pi * y);
      Eigen::Matrix2d g;
      g(0, 0) = pi * pi * s2px * s2py;
      g(0, 1) = 2.0 * pi * pi * s2x * c2py;
      g(1, 0) = -2.0 * pi * pi * c2px * s2y;
      g(1, 1) = -pi * pi * s2px * s2py;
      return g;
    };
    mc.laplace_u = [pi](double x, double y) {
      double s2x = std::sin(pi * x) * std::sin(pi * x);
      double s2y = std::sin(pi * y) * std::sin(pi * y);
      double s2px = std::sin(2.0 * pi * x), s2py = std::sin(2.0 * pi * y);
      double c2px = std::cos(2.0 * pi * x), c2py = std::cos(2.0 * pi * y);
      double p3 = pi * pi * pi;
      return Eigen::Vector2d(2.0 * p3 * c2px * s2py - 4.0 * p3 * s2x * s2py,
                             4.0 * p3 * s2px * s2y - 2.0 * p3 * s2px * c2py);
    };
    mc.p = [pi](double x, double y) { return std::sin(pi * x) * std::cos(pi * y); };
    mc.grad_p = [pi](double x, double y) {
      return Eigen::Vector2d(pi * std::cos(pi * x) * std::cos(pi * y),
                             -pi * std::sin(pi * x) * std::sin(pi * y));
    };
    mc.div_u = nullptr;
    return mc;
  }
  if (id == "gstokes_div") {
    // u = (w, w) with w = sin(pi x) sin(pi y); div u = g != 0
    ManufacturedCase mc;
    mc.id = id;
    mc.u = [pi](double x, double y) {
      double w = std::sin(pi * x) * std::sin(pi * y);
      return Eigen::Vector2d(w, w);
    };
    mc.grad_u = [pi](double x, double y) {
      double wx = pi * std::cos(pi * x) * std::sin(pi * y);
      double wy = pi * std::sin(pi * x) * std::cos(pi * y);
      Eigen::Matrix2d g;
      g << wx, wy, wx, wy;
      return g;
    };
    mc.laplace_u = [pi](double x, double y) {
      double w = std::sin(pi * x) * std::sin(pi * y);
      double l = -2.0 * pi * pi * w;
      return Eigen::Vector2d(l, l);
    };
    mc.p = [pi](double x, double y) { return std::sin(pi * x) * std::cos(pi * y); };
    mc.grad_p = [pi](double x, double y) {
      return Eigen::Vector2d(pi * std::cos(pi * x) * std::cos(pi * y),
                             -pi * std::sin(pi * x) * std::sin(pi * y));
    };
    mc.div_u = [pi](double x, double y) {
      return pi * std::cos(pi * x) * std::sin(pi * y) + pi * std::sin(pi * x) * std::cos(pi * y);
    };
    return mc;
  }
  throw std::invalid_argument("manufactured_solution: unknown id '" + id + "'");
}

ErrorNorms compute_errors(const FeSpaces& spaces, const SaddleState& x,
                          const ManufacturedCase& mc) {
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();
  double eu2 = 0.0, eh2 = 0.0, ep2 = 0.0;
  double vals[6], ref[6][2];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : spaces.quad.points) {
      eval_basis(spaces.degree, qp.x, qp.y, vals, ref);
      double grads[6][2];
      for (int i = 0; i < nb; ++i) {
        grads[i][0] = g.inv_t[0][0] * ref[i][0] + g.inv_t[0][1] * ref[i][1];
        grads[i][1] = g.inv_t[1][0] * ref[i][0] + g.inv_t[1][1] * ref[i][1];
      }
      double px = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double py = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      double w = qp.w * 2.0 * g.area;

      Eigen::Vector2d uh = Eigen::Vector2d::Zero();
      Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
      double ph = 0.0;
      for (int i = 0; i < nb; ++i) {
        int n = spaces.cell_nodes[c][i];
        for (int a = 0; a < 2; ++a) {
          uh[a] += x.u[2 * n + a] * vals[i];
          gh(a, 0) += x.u[2 * n + a] * grads[i][0];
          gh(a, 1) += x.u[2 * n + a] * grads[i][1];
        }
        ph += x.p[n] * vals[i];
      }
      Eigen::Vector2d du = uh - mc.u(px, py);
      Eigen::Matrix2d dg = gh - mc.grad_u(px, py);
      double dp = ph - mc.p(px, py);
      eu2 += w * du.squaredNorm();
      eh2 += w * dg.squaredNorm();
      ep2 += w * dp * dp;
    }
  }
  return {std::sqrt(eu2), std::sqrt(eh2), std::sqrt(ep2)};
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "n,h,eu_l2,eu_h1,ep_l2,eoc_u_l2,eoc_u_h1,eoc_p_l2\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.h << ',' << r.err.u_l2 << ',' << r.err.u_h1 << ',' << r.err.p_l2 << ','
        << r.eoc_u_l2 << ',' << r.eoc_u_h1 << ',' << r.eoc_p_l2 << '\n';
  return out.str();
}

ConvergenceTable run_convergence(const ManufacturedCase& mc, ProblemKind kind, double mu,
                                 const StabilizationConfig& stab, int k,
                                 const std::vector<int>& levels) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw std::invalid_argument("run_convergence: levels must be strictly increasing");

  ConvergenceTable table;
  bool needs_macro =
      stab.pressure_kind == PressureStab::lps || stab.velocity_kind == VelocityStab::lps;
  for (int n : levels) {
    Mesh mesh = build_unit_square_mesh(n, needs_macro);
    ProblemSpec spec;
    spec.kind = kind;
    spec.mu = mu;
    spec.stab = stab;
    spec.force = mc.force(kind, mu);
    if (mc.div_u) spec.div_data = mc.div_u;
    ConvergenceRow row;
    row.n = n;
    row.h = std::sqrt(2.0) / n;
    try {
      auto [x, log] = solve_nonlinear(spec, mesh, k);
      if (!log.converged) {
        table.complete = false;
        break;
      }
      FeSpaces spaces = build_spaces(mesh, k);
      row.err = compute_errors(spaces, x, mc);
    } catch (const SolverFailure&) {
      table.complete = false;
      break;
    }
    if (!table.rows.empty()) {
      const auto& prev = table.rows.back().err;
      row.eoc_u_l2 = std::log2(prev.u_l2 / row.err.u_l2);
      row.eoc_u_h1 = std::log2(prev.u_h1 / row.err.u_h1);
      row.eoc_p_l2 = std::log2(prev.p_l2 / row.err.p_l2);
    }
    table.rows.push_back(row);
  }
  return table;
}

VectorFn cavity_lid_bc() {
  return [](double x, double y) {
    if (y >= 1.0 - 1e-12) {
      double v = 16.0 * x * x * (1.0 - x) * (1.0 - x);
      return Eigen::Vector2d(v, 0.0);
    }
    return Eigen::Vector2d(0.0, 0.0);
  };
}

}  // namespace stabfem
