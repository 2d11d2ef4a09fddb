#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "stabfem/mesh.hpp"
#include "stabfem/quadrature.hpp"

namespace stabfem {

/// Affine map data of one triangle: physical point X = v0 + J*ref,
/// physical gradient = Jinv^T * ref gradient.
struct CellGeometry {
  Vec2 v0;
  double jac[2][2];
  double inv_t[2][2];  // J^{-T}
  double area;
};

CellGeometry cell_geometry(const Mesh& mesh, int cell);

int basis_count(int degree);

/// Scalar Lagrange basis on the reference triangle; vals/grads sized
/// basis_count(degree), grads in reference coordinates.
void eval_basis(int degree, double x, double y, double* vals, double grads[][2]);

/// Equal-order Lagrange spaces on one mesh: the vector velocity space
/// (zero trace on the boundary, imposed by DOF elimination) and the
/// scalar pressure space (zero mean via a solver-side multiplier) share
/// the scalar node structure. Velocity DOF indexing: 2*node + component.
struct FeSpaces {
  const Mesh* mesh = nullptr;
  int degree = 1;
  QuadratureRule quad;

  int num_nodes = 0;
  std::vector<Vec2> nodes;
  std::vector<std::vector<int>> cell_nodes;  // per-cell local -> global scalar node
  std::vector<bool> node_on_boundary;
  std::vector<int> interior_nodes;
  std::vector<int> interior_vdofs;

  Eigen::VectorXd mean_vector;  // m with m.dot(p) = integral of p

  int vdim() const { return 2 * num_nodes; }
  int qdim() const { return num_nodes; }
  int local_nodes() const { return basis_count(degree); }
};

/// Builds the spaces with a quadrature rule of exactness degree 2k+2
/// (degree-8 rule for k=2, covering the degree-7 convective integrands).
FeSpaces build_spaces(const Mesh& mesh, int k);

/// Cell-indexed vector field evaluated at physical coordinates.
using CellField2 = std::function<Eigen::Vector2d(int cell, double x, double y)>;

/// Patchwise polynomial space of degree k-1, discontinuous across macro
/// patches, with per-patch Gram factorizations for L2 projection.
struct PatchProjectionSpace {
  const FeSpaces* spaces = nullptr;
  int poly_degree = 0;  // k - 1
  std::vector<Vec2> patch_centroid;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> gram;

  int basis_size() const { return poly_degree == 0 ? 1 : 3; }
  // patch monomials {1} or {1, x-xc, y-yc}
  void eval_patch_basis(int patch, double x, double y, double* vals) const;
};

PatchProjectionSpace build_patch_projection(const FeSpaces& spaces);

/// Componentwise patchwise polynomial, the image of the L2 projection.
struct ProjectedField {
  const PatchProjectionSpace* space = nullptr;
  Eigen::MatrixXd coeffs;  // (basis_size) x (2 * num_patches), column pair per patch
  Eigen::Vector2d eval(int cell, double x, double y) const;
};

/// Patchwise L2-orthogonal projection of w onto the patch polynomials.
ProjectedField project_to_patches(const PatchProjectionSpace& space, const CellField2& w);

/// Integral over one cell of the nodal interpolant of the product of two
/// P1 fields given by their vertex values: (area/3) * sum p_i q_i.
double nodal_interpolant_product_integral(const Mesh& mesh, int cell,
                                          const Eigen::Vector3d& p_vertex,
                                          const Eigen::Vector3d& q_vertex);

}  // namespace stabfem
