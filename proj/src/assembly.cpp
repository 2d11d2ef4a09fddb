#include "stabfem/assembly.hpp"

#include <vector>

namespace stabfem {

namespace {

// Basis values and physical gradients at one quadrature point of a cell.
struct PointBasis {
  int nb;
  double vals[6];
  double grads[6][2];
  double weight;  // quadrature weight times |det J|

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

VelocitySample sample_at(const FeSpaces& s, const Eigen::VectorXd& u, int cell,
                         const PointBasis& pb) {
  VelocitySample out;
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

}  // namespace

OperatorBlocks assemble_stokes_blocks(const FeSpaces& spaces, double mu) {
  if (mu <= 0.0) throw std::invalid_argument("assemble_stokes_blocks: mu must be positive");
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();

  std::vector<Eigen::Triplet<double>> t_mv, t_b, t_mq;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nb, nb);   // scalar stiffness
    Eigen::MatrixXd Mq = Eigen::MatrixXd::Zero(nb, nb);  // scalar mass
    Eigen::MatrixXd D[2] = {Eigen::MatrixXd::Zero(nb, nb), Eigen::MatrixXd::Zero(nb, nb)};
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          K(i, j) += pb.weight * (pb.grads[i][0] * pb.grads[j][0] + pb.grads[i][1] * pb.grads[j][1]);
          Mq(i, j) += pb.weight * pb.vals[i] * pb.vals[j];
          for (int comp = 0; comp < 2; ++comp)
            D[comp](i, j) += pb.weight * pb.vals[i] * pb.grads[j][comp];
        }
    }
    for (int i = 0; i < nb; ++i) {
      int gi = spaces.cell_nodes[c][i];
      for (int j = 0; j < nb; ++j) {
        int gj = spaces.cell_nodes[c][j];
        for (int comp = 0; comp < 2; ++comp) {
          t_mv.emplace_back(2 * gi + comp, 2 * gj + comp, K(i, j));
          t_b.emplace_back(gi, 2 * gj + comp, D[comp](i, j));
        }
        t_mq.emplace_back(gi, gj, Mq(i, j));
      }
    }
  }

  OperatorBlocks blocks;
  blocks.spaces = &spaces;
  blocks.mu = mu;
  blocks.M_V.resize(spaces.vdim(), spaces.vdim());
  blocks.M_V.setFromTriplets(t_mv.begin(), t_mv.end());
  blocks.B.resize(spaces.qdim(), spaces.vdim());
  blocks.B.setFromTriplets(t_b.begin(), t_b.end());
  blocks.M_Q.resize(spaces.qdim(), spaces.qdim());
  blocks.M_Q.setFromTriplets(t_mq.begin(), t_mq.end());
  blocks.L = mu * blocks.M_V;
  return blocks;
}

Eigen::VectorXd convection_residual(const FeSpaces& spaces, const Eigen::VectorXd& u) {
  if (u.size() != spaces.vdim())
    throw std::invalid_argument("convection_residual: velocity size mismatch");
  const Mesh& mesh = *spaces.mesh;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(spaces.vdim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      VelocitySample s = sample_at(spaces, u, c, pb);
      Eigen::Vector2d conv = s.grad * s.value;  // (u.grad)u
      double divu = s.grad(0, 0) + s.grad(1, 1);
      Eigen::Vector2d integrand = conv + 0.5 * divu * s.value;
      for (int i = 0; i < pb.nb; ++i) {
        int n = spaces.cell_nodes[c][i];
        for (int a = 0; a < 2; ++a) r[2 * n + a] += pb.weight * pb.vals[i] * integrand[a];
      }
    }
  }
  return r;
}

SparseMat convection_jacobian(const FeSpaces& spaces, const Eigen::VectorXd& u) {
  if (u.size() != spaces.vdim())
    throw std::invalid_argument("convection_jacobian: velocity size mismatch");
  const Mesh& mesh = *spaces.mesh;
  int nb = spaces.local_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(2 * nb, 2 * nb);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      VelocitySample s = sample_at(spaces, u, c, pb);
      double divu = s.grad(0, 0) + s.grad(1, 1);
      for (int j = 0; j < nb; ++j) {
        double udg = s.value[0] * pb.grads[j][0] + s.value[1] * pb.grads[j][1];  // (u.grad)phi_j
        for (int b = 0; b < 2; ++b) {
          // direction w = phi_j e_b at this point
          Eigen::Vector2d dr;
          for (int a = 0; a < 2; ++a) {
            double v = pb.vals[j] * s.grad(a, b);            // (w.grad)u
            if (a == b) v += udg;                            // (u.grad)w
            v += 0.5 * pb.grads[j][b] * s.value[a];          // (1/2) u div w
            if (a == b) v += 0.5 * divu * pb.vals[j];        // (1/2) w div u
            dr[a] = v;
          }
          for (int i = 0; i < nb; ++i)
            for (int a = 0; a < 2; ++a)
              local(2 * i + a, 2 * j + b) += pb.weight * pb.vals[i] * dr[a];
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

Eigen::VectorXd assemble_velocity_load(const FeSpaces& spaces,
                                       const std::function<Eigen::Vector2d(double, double)>& f) {
  const Mesh& mesh = *spaces.mesh;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(spaces.vdim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      double x = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double y = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      Eigen::Vector2d fv = f(x, y);
      for (int i = 0; i < pb.nb; ++i) {
        int n = spaces.cell_nodes[c][i];
        for (int a = 0; a < 2; ++a) rhs[2 * n + a] += pb.weight * pb.vals[i] * fv[a];
      }
    }
  }
  return rhs;
}

Eigen::VectorXd assemble_pressure_load(const FeSpaces& spaces,
                                       const std::function<double(double, double)>& gfun) {
  const Mesh& mesh = *spaces.mesh;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(spaces.qdim());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : spaces.quad.points) {
      PointBasis pb(spaces, g, qp);
      double x = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double y = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      double gv = gfun(x, y);
      for (int i = 0; i < pb.nb; ++i)
        rhs[spaces.cell_nodes[c][i]] += pb.weight * pb.vals[i] * gv;
    }
  }
  return rhs;
}

VelocitySample sample_velocity(const FeSpaces& spaces, const Eigen::VectorXd& u, int cell,
                               double xref, double yref) {
  CellGeometry g = cell_geometry(*spaces.mesh, cell);
  QuadratureRule::Point qp{xref, yref, 0.0};
  PointBasis pb(spaces, g, qp);
  return sample_at(spaces, u, cell, pb);
}

}  // namespace stabfem
