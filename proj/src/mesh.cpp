#include "stabfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stabfem {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double longest_edge(const Mesh& m, const std::array<int, 3>& cell) {
  const Vec2& a = m.vertices[cell[0]];
  const Vec2& b = m.vertices[cell[1]];
  const Vec2& c = m.vertices[cell[2]];
  return std::max({dist(a, b), dist(b, c), dist(c, a)});
}

void compute_h(Mesh& m) {
  m.h_K.resize(m.cells.size());
  for (std::size_t i = 0; i < m.cells.size(); ++i)
    m.h_K[i] = longest_edge(m, m.cells[i]);
}

}  // namespace

double Mesh::cell_area(int c) const {
  const auto& t = cells[c];
  return signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int c = 0; c < num_cells(); ++c) s += cell_area(c);
  return s;
}

Mesh build_unit_square_mesh(int n, bool with_macro) {
  if (n < 1) throw std::invalid_argument("build_unit_square_mesh: n must be >= 1");
  if (with_macro) {
    if (n % 2 != 0)
      throw std::invalid_argument("build_unit_square_mesh: with_macro requires even n");
    Mesh coarse = build_unit_square_mesh(n / 2, false);
    return refine_uniform(coarse);
  }

  Mesh m;
  m.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.cells.push_back({v00, v10, v11});
      m.cells.push_back({v00, v11, v01});
    }
  }
  for (int i = 0; i < n; ++i) {
    m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), 0});
    m.boundary_edges.push_back({vid(i, n), vid(i + 1, n), 0});
    m.boundary_edges.push_back({vid(0, i), vid(0, i + 1), 0});
    m.boundary_edges.push_back({vid(n, i), vid(n, i + 1), 0});
  }
  compute_h(m);
  return m;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.vertices = mesh.vertices;

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec2 p{0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
           0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)};
    int id = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(p);
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<int> parent;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cells[c];
    int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    fine.cells.push_back({t[0], m01, m20});
    fine.cells.push_back({m01, t[1], m12});
    fine.cells.push_back({m20, m12, t[2]});
    fine.cells.push_back({m01, m12, m20});
    for (int r = 0; r < 4; ++r) parent.push_back(c);
  }
  for (const auto& e : mesh.boundary_edges) {
    int m = mid(e.a, e.b);
    fine.boundary_edges.push_back({e.a, m, e.marker});
    fine.boundary_edges.push_back({m, e.b, e.marker});
  }
  fine.parent_patch = std::move(parent);
  fine.num_patches = mesh.num_cells();
  fine.patch_diameter.resize(mesh.num_cells());
  fine.patch_area.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    fine.patch_diameter[c] = longest_edge(mesh, mesh.cells[c]);
    fine.patch_area[c] = mesh.cell_area(c);
  }
  compute_h(fine);
  return fine;
}

namespace {

struct LineReader {
  std::istream& in;
  int line_no = 0;

  // Returns the next non-empty, non-comment line; false at EOF.
  bool next(std::string& out) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank) {
        out = line;
        return true;
      }
    }
    return false;
  }
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::runtime_error("mesh parse error at line " + std::to_string(line) + ": " + what);
}

}  // namespace

Mesh parse_mesh(std::istream& in) {
  LineReader rd{in};
  std::string line;
  if (!rd.next(line)) parse_fail(rd.line_no, "missing header");
  long nv = 0, nc = 0, nb = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> nv >> nc >> nb) || nv < 3 || nc < 1 || nb < 0)
      parse_fail(rd.line_no, "malformed header 'NV NC NB'");
  }

  Mesh m;
  m.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    if (!rd.next(line)) parse_fail(rd.line_no, "unexpected end of file in vertex block");
    std::istringstream ss(line);
    Vec2 v;
    if (!(ss >> v.x >> v.y)) parse_fail(rd.line_no, "malformed vertex line");
    m.vertices.push_back(v);
  }
  for (long i = 0; i < nc; ++i) {
    if (!rd.next(line)) parse_fail(rd.line_no, "unexpected end of file in cell block");
    std::istringstream ss(line);
    std::array<int, 3> t{};
    if (!(ss >> t[0] >> t[1] >> t[2])) parse_fail(rd.line_no, "malformed cell line");
    for (int k : t)
      if (k < 0 || k >= nv) parse_fail(rd.line_no, "vertex index out of range");
    double a = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    if (a < 0.0) {
      std::swap(t[1], t[2]);  // orientation fix
      a = -a;
    }
    if (a == 0.0) parse_fail(rd.line_no, "zero-area cell");
    m.cells.push_back(t);
  }
  for (long i = 0; i < nb; ++i) {
    if (!rd.next(line)) parse_fail(rd.line_no, "unexpected end of file in boundary block");
    std::istringstream ss(line);
    BoundaryEdge e;
    if (!(ss >> e.a >> e.b >> e.marker)) parse_fail(rd.line_no, "malformed boundary edge line");
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv)
      parse_fail(rd.line_no, "boundary vertex index out of range");
    m.boundary_edges.push_back(e);
  }
  compute_h(m);
  validate_mesh(m);
  return m;
}

Mesh parse_mesh_string(const std::string& text) {
  std::istringstream in(text);
  return parse_mesh(in);
}

std::string serialize_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << mesh.num_vertices() << ' ' << mesh.num_cells() << ' ' << mesh.boundary_edges.size()
      << '\n';
  for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.cells) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.a << ' ' << e.b << ' ' << e.marker << '\n';
  return out.str();
}

void validate_mesh(const Mesh& mesh) {
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cell_area(c) <= 0.0)
      throw std::invalid_argument("mesh: cell " + std::to_string(c) + " has non-positive area");
  }
  // Conformity: every interior edge must appear exactly twice with the
  // same vertex pair.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.cells)
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(t[e], t[(e + 1) % 3]);
      ++edge_count[key];
    }
  for (const auto& [key, count] : edge_count)
    if (count > 2)
      throw std::invalid_argument("mesh: edge shared by more than two cells");

  if (mesh.h_K.size() != mesh.cells.size())
    throw std::invalid_argument("mesh: h_K size mismatch");
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    double h = longest_edge(mesh, mesh.cells[c]);
    if (std::abs(mesh.h_K[c] - h) > 1e-15 * std::max(1.0, h))
      throw std::invalid_argument("mesh: h_K inconsistent with longest edge");
  }

  if (mesh.parent_patch) {
    const auto& pp = *mesh.parent_patch;
    if (static_cast<int>(pp.size()) != mesh.num_cells())
      throw std::invalid_argument("mesh: parent_patch size mismatch");
    std::vector<double> patch_area(mesh.num_patches, 0.0);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      if (pp[c] < 0 || pp[c] >= mesh.num_patches)
        throw std::invalid_argument("mesh: parent_patch index out of range");
      patch_area[pp[c]] += mesh.cell_area(c);
    }
    if (static_cast<int>(mesh.patch_area.size()) == mesh.num_patches) {
      for (int p = 0; p < mesh.num_patches; ++p)
        if (std::abs(patch_area[p] - mesh.patch_area[p]) > 1e-12 * mesh.patch_area[p])
          throw std::invalid_argument("mesh: children of patch " + std::to_string(p) +
                                      " do not tile the parent");
    }
    double total = 0.0;
    for (double a : patch_area) total += a;
    if (std::abs(total - mesh.total_area()) > 1e-12 * mesh.total_area())
      throw std::invalid_argument("mesh: patch areas do not tile the mesh");
  }
}

}  // namespace stabfem
