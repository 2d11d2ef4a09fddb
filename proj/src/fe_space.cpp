#include "stabfem/fe_space.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace stabfem {

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  const auto& t = mesh.cells[cell];
  const Vec2& a = mesh.vertices[t[0]];
  const Vec2& b = mesh.vertices[t[1]];
  const Vec2& c = mesh.vertices[t[2]];
  CellGeometry g;
  g.v0 = a;
  g.jac[0][0] = b.x - a.x;
  g.jac[0][1] = c.x - a.x;
  g.jac[1][0] = b.y - a.y;
  g.jac[1][1] = c.y - a.y;
  double det = g.jac[0][0] * g.jac[1][1] - g.jac[0][1] * g.jac[1][0];
  g.area = 0.5 * det;
  // J^{-1} = 1/det [d -b; -c a]; store its transpose
  g.inv_t[0][0] = g.jac[1][1] / det;
  g.inv_t[0][1] = -g.jac[1][0] / det;
  g.inv_t[1][0] = -g.jac[0][1] / det;
  g.inv_t[1][1] = g.jac[0][0] / det;
  return g;
}

int basis_count(int degree) { return degree == 1 ? 3 : 6; }

void eval_basis(int degree, double x, double y, double* vals, double grads[][2]) {
  double l1 = 1.0 - x - y, l2 = x, l3 = y;
  if (degree == 1) {
    vals[0] = l1;
    vals[1] = l2;
    vals[2] = l3;
    grads[0][0] = -1.0; grads[0][1] = -1.0;
    grads[1][0] = 1.0;  grads[1][1] = 0.0;
    grads[2][0] = 0.0;  grads[2][1] = 1.0;
    return;
  }
  if (degree != 2) throw std::invalid_argument("eval_basis: unsupported degree");
  vals[0] = l1 * (2.0 * l1 - 1.0);
  vals[1] = l2 * (2.0 * l2 - 1.0);
  vals[2] = l3 * (2.0 * l3 - 1.0);
  vals[3] = 4.0 * l1 * l2;  // edge 0-1
  vals[4] = 4.0 * l2 * l3;  // edge 1-2
  vals[5] = 4.0 * l3 * l1;  // edge 2-0
  double d1[2] = {-1.0, -1.0}, d2[2] = {1.0, 0.0}, d3[2] = {0.0, 1.0};
  for (int c = 0; c < 2; ++c) {
    grads[0][c] = (4.0 * l1 - 1.0) * d1[c];
    grads[1][c] = (4.0 * l2 - 1.0) * d2[c];
    grads[2][c] = (4.0 * l3 - 1.0) * d3[c];
    grads[3][c] = 4.0 * (l1 * d2[c] + l2 * d1[c]);
    grads[4][c] = 4.0 * (l2 * d3[c] + l3 * d2[c]);
    grads[5][c] = 4.0 * (l3 * d1[c] + l1 * d3[c]);
  }
}

FeSpaces build_spaces(const Mesh& mesh, int k) {
  if (k != 1 && k != 2) throw std::invalid_argument("build_spaces: degree must be 1 or 2");
  FeSpaces s;
  s.mesh = &mesh;
  s.degree = k;
  s.quad = triangle_rule(2 * k + 2 + (k == 2 ? 2 : 0));  // k=2 uses the degree-8 rule

  s.num_nodes = mesh.num_vertices();
  s.nodes = mesh.vertices;
  s.cell_nodes.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cells[c];
    s.cell_nodes[c] = {t[0], t[1], t[2]};
  }

  std::map<std::pair<int, int>, int> edge_node;
  if (k == 2) {
    auto midpoint_node = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = edge_node.find(key);
      if (it != edge_node.end()) return it->second;
      int id = s.num_nodes++;
      s.nodes.push_back({0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                         0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
      edge_node.emplace(key, id);
      return id;
    };
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& t = mesh.cells[c];
      s.cell_nodes[c].push_back(midpoint_node(t[0], t[1]));
      s.cell_nodes[c].push_back(midpoint_node(t[1], t[2]));
      s.cell_nodes[c].push_back(midpoint_node(t[2], t[0]));
    }
  }

  s.node_on_boundary.assign(s.num_nodes, false);
  for (const auto& e : mesh.boundary_edges) {
    s.node_on_boundary[e.a] = true;
    s.node_on_boundary[e.b] = true;
    if (k == 2) {
      auto it = edge_node.find(std::minmax(e.a, e.b));
      if (it != edge_node.end()) s.node_on_boundary[it->second] = true;
    }
  }
  for (int n = 0; n < s.num_nodes; ++n)
    if (!s.node_on_boundary[n]) {
      s.interior_nodes.push_back(n);
      s.interior_vdofs.push_back(2 * n);
      s.interior_vdofs.push_back(2 * n + 1);
    }

  // Pressure mean functional m, m.dot(p) = integral of p.
  s.mean_vector = Eigen::VectorXd::Zero(s.num_nodes);
  int nb = basis_count(k);
  std::vector<double> vals(nb);
  std::vector<std::array<double, 2>> grads(nb);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    for (const auto& qp : s.quad.points) {
      eval_basis(k, qp.x, qp.y, vals.data(), reinterpret_cast<double(*)[2]>(grads.data()));
      double w = qp.w * 2.0 * g.area;
      for (int i = 0; i < nb; ++i) s.mean_vector[s.cell_nodes[c][i]] += w * vals[i];
    }
  }
  return s;
}

void PatchProjectionSpace::eval_patch_basis(int patch, double x, double y, double* vals) const {
  vals[0] = 1.0;
  if (poly_degree >= 1) {
    vals[1] = x - patch_centroid[patch].x;
    vals[2] = y - patch_centroid[patch].y;
  }
}

PatchProjectionSpace build_patch_projection(const FeSpaces& spaces) {
  const Mesh& mesh = *spaces.mesh;
  if (!mesh.has_macro())
    throw std::runtime_error("patch projection requires a mesh with a macro hierarchy");
  PatchProjectionSpace ps;
  ps.spaces = &spaces;
  ps.poly_degree = spaces.degree - 1;
  int np = mesh.num_patches;
  ps.patch_centroid.assign(np, {0.0, 0.0});

  const auto& parent = *mesh.parent_patch;
  std::vector<double> area(np, 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    const auto& t = mesh.cells[c];
    double cx = (mesh.vertices[t[0]].x + mesh.vertices[t[1]].x + mesh.vertices[t[2]].x) / 3.0;
    double cy = (mesh.vertices[t[0]].y + mesh.vertices[t[1]].y + mesh.vertices[t[2]].y) / 3.0;
    ps.patch_centroid[parent[c]].x += g.area * cx;
    ps.patch_centroid[parent[c]].y += g.area * cy;
    area[parent[c]] += g.area;
  }
  for (int p = 0; p < np; ++p) {
    ps.patch_centroid[p].x /= area[p];
    ps.patch_centroid[p].y /= area[p];
  }

  int nbp = ps.basis_size();
  std::vector<Eigen::MatrixXd> gram(np, Eigen::MatrixXd::Zero(nbp, nbp));
  std::vector<double> d(nbp);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    int p = parent[c];
    for (const auto& qp : spaces.quad.points) {
      double x = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double y = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      ps.eval_patch_basis(p, x, y, d.data());
      double w = qp.w * 2.0 * g.area;
      for (int i = 0; i < nbp; ++i)
        for (int j = 0; j < nbp; ++j) gram[p](i, j) += w * d[i] * d[j];
    }
  }
  ps.gram.reserve(np);
  for (int p = 0; p < np; ++p) ps.gram.emplace_back(gram[p]);
  return ps;
}

Eigen::Vector2d ProjectedField::eval(int cell, double x, double y) const {
  const Mesh& mesh = *space->spaces->mesh;
  int p = (*mesh.parent_patch)[cell];
  int nbp = space->basis_size();
  double d[3];
  space->eval_patch_basis(p, x, y, d);
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int comp = 0; comp < 2; ++comp)
    for (int i = 0; i < nbp; ++i) out[comp] += coeffs(i, 2 * p + comp) * d[i];
  return out;
}

ProjectedField project_to_patches(const PatchProjectionSpace& space, const CellField2& w) {
  const FeSpaces& spaces = *space.spaces;
  const Mesh& mesh = *spaces.mesh;
  const auto& parent = *mesh.parent_patch;
  int np = mesh.num_patches;
  int nbp = space.basis_size();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nbp, 2 * np);
  double d[3];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    int p = parent[c];
    for (const auto& qp : spaces.quad.points) {
      double x = g.v0.x + g.jac[0][0] * qp.x + g.jac[0][1] * qp.y;
      double y = g.v0.y + g.jac[1][0] * qp.x + g.jac[1][1] * qp.y;
      space.eval_patch_basis(p, x, y, d);
      Eigen::Vector2d v = w(c, x, y);
      double wq = qp.w * 2.0 * g.area;
      for (int i = 0; i < nbp; ++i) {
        rhs(i, 2 * p) += wq * d[i] * v[0];
        rhs(i, 2 * p + 1) += wq * d[i] * v[1];
      }
    }
  }
  ProjectedField out;
  out.space = &space;
  out.coeffs.resize(nbp, 2 * np);
  for (int p = 0; p < np; ++p)
    out.coeffs.middleCols(2 * p, 2) = space.gram[p].solve(rhs.middleCols(2 * p, 2));
  return out;
}

double nodal_interpolant_product_integral(const Mesh& mesh, int cell,
                                          const Eigen::Vector3d& p_vertex,
                                          const Eigen::Vector3d& q_vertex) {
  double area = mesh.cell_area(cell);
  return area / 3.0 * p_vertex.dot(q_vertex);
}

}  // namespace stabfem
