#include "stabfem/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace stabfem {

PressureStab pressure_stab_from_string(const std::string& s) {
  if (s == "none") return PressureStab::none;
  if (s == "bp") return PressureStab::bp;
  if (s == "bh") return PressureStab::bh;
  if (s == "lps") return PressureStab::lps;
  throw std::invalid_argument("unknown pressure stabilization '" + s + "'");
}

VelocityStab velocity_stab_from_string(const std::string& s) {
  if (s == "none") return VelocityStab::none;
  if (s == "lps") return VelocityStab::lps;
  if (s == "supg") return VelocityStab::supg;
  throw std::invalid_argument("unknown velocity stabilization '" + s + "'");
}

void validate_config(const FeSpaces& spaces, const StabilizationConfig& config) {
  if (config.delta0_p < 0.0 || config.delta0_v < 0.0)
    throw std::invalid_argument("stabilization: delta0 must be nonnegative");
  if (config.pressure_kind == PressureStab::bh && spaces.degree != 1)
    throw std::invalid_argument("stabilization: bh is only defined for degree 1");
  bool needs_macro = config.pressure_kind == PressureStab::lps ||
                     config.velocity_kind == VelocityStab::lps;
  if (needs_macro && !spaces.mesh->has_macro())
    throw std::invalid_argument("stabilization: lps requires a mesh with a macro hierarchy");
  if (config.velocity_kind == VelocityStab::supg && config.clamp_eps <= 0.0)
    throw std::invalid_argument("stabilization: supg requires clamp_eps > 0");
}

namespace {

struct PointBasis {
  int nb;
  double vals[6];
  double grads[6][2];
  double weight;

  PointBasis(const FeSpaces& s, const CellGeometry& g, const QuadratureRule::Point& qp) {
    nb = s.local_nodes();
    double ref[6][2];
    eval_basis(s.degree, qp.x, qp.y, vals, ref);
    for (int i = 0; i < nb; ++i) {
      grads[i][0] = g.inv_t[0][0] * ref[i][0] + g.inv_t[0][1] * ref[i][1];
      grads[i][1] = g.inv_t[1][0] * ref[i][0] + g.inv_t[1][1] * ref[i][1];
    }
    weight = qp.w * 2.0 * g.area;
  }
};

SparseMat assemble_bp(const FeSpaces& spaces, double delta0) {
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    double scale = delta0 * mesh.h_K[c] * mesh.h_K[c];
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nb, nb);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
          K(i, j) += pb.weight * (pb.grads[i][0] * pb.grads[j][0] + pb.grads[i][1] * pb.grads[j][1]);
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        trip.emplace_back(spaces.cell_nodes[c][i], spaces.cell_nodes[c][j], scale * K(i, j));
  }
  SparseMat T(spaces.qdim(), spaces.qdim());
  T.setFromTriplets(trip.begin(), trip.end());
  return T;
}

SparseMat assemble_bh(const FeSpaces& spaces) {
  const Mesh& mesh = *spaces.mesh;
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double area = mesh.cell_area(c);
    // int_K I_h^1(phi_i phi_j) = (area/3) delta_ij, int_K phi_i phi_j = area/12 (1 + delta_ij)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = (i == j ? area / 3.0 - area / 6.0 : -area / 12.0);
        trip.emplace_back(spaces.cell_nodes[c][i], spaces.cell_nodes[c][j], v);
      }
  }
  SparseMat T(spaces.qdim(), spaces.qdim());
  T.setFromTriplets(trip.begin(), trip.end());
  return T;
}

}  // namespace

PatchFluctuation build_patch_fluctuation(const FeSpaces& spaces) {
  const Mesh& mesh = *spaces.mesh;
  if (!mesh.has_macro())
    throw std::runtime_error("build_patch_fluctuation: mesh lacks a macro hierarchy");
  PatchProjectionSpace ps = build_patch_projection(spaces);
  const auto& parent = *mesh.parent_patch;
  int np = mesh.num_patches;
  int nbp = ps.basis_size();

  PatchFluctuation out;
  out.patch_dofs.resize(np);
  std::vector<std::map<int, int>> local_index(np);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    int p = parent[c];
    for (int n : spaces.cell_nodes[c])
      if (local_index[p].emplace(n, static_cast<int>(out.patch_dofs[p].size())).second)
        out.patch_dofs[p].push_back(n);
  }

  out.fluct.resize(np);
  out.stiffness.resize(np);
  std::vector<Eigen::MatrixXd> K(np), G0(np), G1(np);
  for (int p = 0; p < np; ++p) {
    int nd = static_cast<int>(out.patch_dofs[p].size());
    K[p] = Eigen::MatrixXd::Zero(nd, nd);
    G0[p] = Eigen::MatrixXd::Zero(nbp, nd);
    G1[p] = Eigen::MatrixXd::Zero(nbp, nd);
  }
  double d[3];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    int p = parent[c];
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      double x = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double y = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      ps.eval_patch_basis(p, x, y, d);
      for (int i = 0; i < pb.nb; ++i) {
        int li = local_index[p].at(spaces.cell_nodes[c][i]);
        for (int j = 0; j < pb.nb; ++j) {
          int lj = local_index[p].at(spaces.cell_nodes[c][j]);
          K[p](li, lj) += pb.weight * (pb.grads[i][0] * pb.grads[j][0] + pb.grads[i][1] * pb.grads[j][1]);
        }
        for (int m = 0; m < nbp; ++m) {
          G0[p](m, li) += pb.weight * d[m] * pb.grads[i][0];
          G1[p](m, li) += pb.weight * d[m] * pb.grads[i][1];
        }
      }
    }
  }
  for (int p = 0; p < np; ++p) {
    out.stiffness[p] = K[p];
    Eigen::MatrixXd corr = G0[p].transpose() * ps.gram[p].solve(G0[p]) +
                           G1[p].transpose() * ps.gram[p].solve(G1[p]);
    out.fluct[p] = K[p] - corr;
  }
  return out;
}

SparseMat assemble_pressure_stab(const FeSpaces& spaces, const StabilizationConfig& config) {
  validate_config(spaces, config);
  switch (config.pressure_kind) {
    case PressureStab::none: {
      SparseMat T(spaces.qdim(), spaces.qdim());
      return T;
    }
    case PressureStab::bp:
      return assemble_bp(spaces, config.delta0_p);
    case PressureStab::bh:
      return assemble_bh(spaces);
    case PressureStab::lps: {
      const Mesh& mesh = *spaces.mesh;
      PatchFluctuation pf = build_patch_fluctuation(spaces);
      std::vector<Eigen::Triplet<double>> trip;
      for (int p = 0; p < mesh.num_patches; ++p) {
        double h = mesh.patch_diameter[p];
        double scale = config.delta0_p * h * h;
        const auto& dofs = pf.patch_dofs[p];
        for (std::size_t i = 0; i < dofs.size(); ++i)
          for (std::size_t j = 0; j < dofs.size(); ++j)
            trip.emplace_back(dofs[i], dofs[j], scale * pf.fluct[p](i, j));
      }
      SparseMat T(spaces.qdim(), spaces.qdim());
      T.setFromTriplets(trip.begin(), trip.end());
      return T;
    }
  }
  throw std::logic_error("unreachable");
}

double cell_linf_norm(const FeSpaces& spaces, const Eigen::VectorXd& u, int cell) {
  double best = 0.0;
  auto consider = [&](double xref, double yref) {
    VelocitySample s = sample_velocity(spaces, u, cell, xref, yref);
    best = std::max(best, s.value.norm());
  };
  consider(0.0, 0.0);
  consider(1.0, 0.0);
  consider(0.0, 1.0);
  for (const auto& qp : spaces.quad.points) consider(qp.x, qp.y);
  return best;
}

namespace {

std::vector<double> lps_deltas(const FeSpaces& spaces, const StabilizationConfig& config,
                               const PatchFluctuation& pf, const Eigen::VectorXd& u) {
  const Mesh& mesh = *spaces.mesh;
  std::vector<double> delta(mesh.num_patches);
  for (int p = 0; p < mesh.num_patches; ++p) {
    const auto& dofs = pf.patch_dofs[p];
    int nd = static_cast<int>(dofs.size());
    double gn2 = 0.0;
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd ua(nd);
      for (int i = 0; i < nd; ++i) ua[i] = u[2 * dofs[i] + a];
      gn2 += ua.dot(pf.stiffness[p] * ua);
    }
    double grad_norm = std::sqrt(std::max(gn2, 0.0));
    delta[p] = config.delta0_v * std::min(mesh.patch_diameter[p], grad_norm);
  }
  return delta;
}

Eigen::VectorXd lps_residual(const FeSpaces& spaces, const StabilizationConfig& config,
                             const Eigen::VectorXd& u) {
  PatchFluctuation pf = build_patch_fluctuation(spaces);
  auto delta = lps_deltas(spaces, config, pf, u);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(spaces.vdim());
  for (int p = 0; p < spaces.mesh->num_patches; ++p) {
    const auto& dofs = pf.patch_dofs[p];
    int nd = static_cast<int>(dofs.size());
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd ua(nd);
      for (int i = 0; i < nd; ++i) ua[i] = u[2 * dofs[i] + a];
      Eigen::VectorXd ra = delta[p] * (pf.fluct[p] * ua);
      for (int i = 0; i < nd; ++i) r[2 * dofs[i] + a] += ra[i];
    }
  }
  return r;
}

SparseMat lps_jacobian(const FeSpaces& spaces, const StabilizationConfig& config,
                       const Eigen::VectorXd& u) {
  PatchFluctuation pf = build_patch_fluctuation(spaces);
  auto delta = lps_deltas(spaces, config, pf, u);
  std::vector<Eigen::Triplet<double>> trip;
  for (int p = 0; p < spaces.mesh->num_patches; ++p) {
    const auto& dofs = pf.patch_dofs[p];
    for (std::size_t i = 0; i < dofs.size(); ++i)
      for (std::size_t j = 0; j < dofs.size(); ++j)
        for (int a = 0; a < 2; ++a)
          trip.emplace_back(2 * dofs[i] + a, 2 * dofs[j] + a, delta[p] * pf.fluct[p](i, j));
  }
  SparseMat J(spaces.vdim(), spaces.vdim());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

struct VelSample {
  Eigen::Vector2d value;
  Eigen::Matrix2d grad;
};

VelSample sample_at(const FeSpaces& s, const Eigen::VectorXd& u, int cell, const PointBasis& pb) {
  VelSample out;
  out.value.setZero();
  out.grad.setZero();
  for (int i = 0; i < pb.nb; ++i) {
    int n = s.cell_nodes[cell][i];
    for (int a = 0; a < 2; ++a) {
      double coef = u[2 * n + a];
      out.value[a] += coef * pb.vals[i];
      out.grad(a, 0) += coef * pb.grads[i][0];
      out.grad(a, 1) += coef * pb.grads[i][1];
    }
  }
  return out;
}

Eigen::VectorXd supg_residual(const FeSpaces& spaces, const StabilizationConfig& config,
                              const Eigen::VectorXd& u) {
  const Mesh& mesh = *spaces.mesh;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(spaces.vdim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double linf = cell_linf_norm(spaces, u, c);
    double delta = config.delta0_v * mesh.h_K[c] / std::max(linf, config.clamp_eps);
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      VelSample s = sample_at(spaces, u, c, pb);
      Eigen::Vector2d conv = s.grad * s.value;
      for (int i = 0; i < pb.nb; ++i) {
        int n = spaces.cell_nodes[c][i];
        double udphi = s.value[0] * pb.grads[i][0] + s.value[1] * pb.grads[i][1];
        for (int a = 0; a < 2; ++a) r[2 * n + a] += delta * pb.weight * conv[a] * udphi;
      }
    }
  }
  return r;
}

SparseMat supg_jacobian(const FeSpaces& spaces, const StabilizationConfig& config,
                        const Eigen::VectorXd& u) {
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double linf = cell_linf_norm(spaces, u, c);
    double delta = config.delta0_v * mesh.h_K[c] / std::max(linf, config.clamp_eps);
    CellGeometry g = cell_geometry(mesh, c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(2 * nb, 2 * nb);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      VelSample s = sample_at(spaces, u, c, pb);
      Eigen::Vector2d conv = s.grad * s.value;
      for (int j = 0; j < nb; ++j) {
        double udgj = s.value[0] * pb.grads[j][0] + s.value[1] * pb.grads[j][1];
        for (int b = 0; b < 2; ++b) {
          // derivative of (u.grad)u in direction w = phi_j e_b
          Eigen::Vector2d dconv;
          for (int a = 0; a < 2; ++a) {
            dconv[a] = pb.vals[j] * s.grad(a, b);
            if (a == b) dconv[a] += udgj;
          }
          for (int i = 0; i < nb; ++i) {
            double udgi = s.value[0] * pb.grads[i][0] + s.value[1] * pb.grads[i][1];
            double dudgi = pb.vals[j] * pb.grads[i][b];  // derivative of (u.grad)phi_i
            for (int a = 0; a < 2; ++a)
              local(2 * i + a, 2 * j + b) +=
                  delta * pb.weight * (dconv[a] * udgi + conv[a] * dudgi);
          }
        }
      }
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            trip.emplace_back(2 * spaces.cell_nodes[c][i] + a, 2 * spaces.cell_nodes[c][j] + b,
                              local(2 * i + a, 2 * j + b));
  }
  SparseMat J(spaces.vdim(), spaces.vdim());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

}  // namespace

Eigen::VectorXd velocity_stab_residual(const FeSpaces& spaces, const StabilizationConfig& config,
                                       const Eigen::VectorXd& u) {
  validate_config(spaces, config);
  switch (config.velocity_kind) {
    case VelocityStab::none:
      return Eigen::VectorXd::Zero(spaces.vdim());
    case VelocityStab::lps:
      return lps_residual(spaces, config, u);
    case VelocityStab::supg:
      return supg_residual(spaces, config, u);
  }
  throw std::logic_error("unreachable");
}

SparseMat velocity_stab_jacobian(const FeSpaces& spaces, const StabilizationConfig& config,
                                 const Eigen::VectorXd& u) {
  validate_config(spaces, config);
  switch (config.velocity_kind) {
    case VelocityStab::none: {
      SparseMat J(spaces.vdim(), spaces.vdim());
      return J;
    }
    case VelocityStab::lps:
      return lps_jacobian(spaces, config, u);
    case VelocityStab::supg:
      return supg_jacobian(spaces, config, u);
  }
  throw std::logic_error("unreachable");
}

}  // namespace stabfem
