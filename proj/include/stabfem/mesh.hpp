#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stabfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int marker = 0;
};

/// Conforming triangulation of a polygonal domain. Cells are stored
/// counterclockwise. When parent_patch is present, the mesh carries a
/// macro-patch hierarchy: each fine cell belongs to exactly one coarse
/// cell of the macro-triangulation, and patch_diameter holds the coarse
/// cell diameters.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> h_K;  // longest edge per cell

  std::optional<std::vector<int>> parent_patch;
  std::vector<double> patch_diameter;
  std::vector<double> patch_area;  // coarse-cell areas, for tiling checks
  int num_patches = 0;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  double cell_area(int c) const;
  double total_area() const;
  bool has_macro() const { return parent_patch.has_value(); }
};

/// Structured right-triangle mesh of [0,1]^2 with (n+1)^2 vertices and
/// 2n^2 cells. With with_macro, n must be even and the mesh is built as
/// one uniform refinement of the (n/2)x(n/2) coarse mesh, populating the
/// patch hierarchy.
Mesh build_unit_square_mesh(int n, bool with_macro = false);

/// Split every cell into 4 similar children via edge midpoints. The
/// result's parent_patch points to the input cells.
Mesh refine_uniform(const Mesh& mesh);

/// Strict parser for the line-oriented ASCII format:
///   NV NC NB
///   NV lines "x y", NC lines "i j k", NB lines "i j marker"
/// Indices 0-based, '#' starts a comment. Clockwise cells are reoriented;
/// degenerate cells are rejected. Errors carry the offending line number.
Mesh parse_mesh(std::istream& in);
Mesh parse_mesh_string(const std::string& text);

std::string serialize_mesh(const Mesh& mesh);

/// Validates all Mesh invariants (positive areas, conformity, patch
/// tiling, h_K consistency); throws std::invalid_argument on violation.
void validate_mesh(const Mesh& mesh);

}  // namespace stabfem
