#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "stabfem/mesh.hpp"

using namespace stabfem;

namespace {

// connectivity signature invariant under vertex renumbering: sorted list
// of sorted coordinate triples
std::vector<std::array<double, 6>> cell_signature(const Mesh& m) {
  std::vector<std::array<double, 6>> sig;
  for (const auto& c : m.cells) {
    std::array<std::pair<double, double>, 3> pts;
    for (int i = 0; i < 3; ++i) pts[i] = {m.vertices[c[i]].x, m.vertices[c[i]].y};
    std::sort(pts.begin(), pts.end());
    sig.push_back({pts[0].first, pts[0].second, pts[1].first, pts[1].second, pts[2].first,
                   pts[2].second});
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("unit square counts") {
    Mesh m1 = build_unit_square_mesh(1);
    CHECK(m1.num_vertices() == 4);
    CHECK(m1.num_cells() == 2);
    CHECK(m1.boundary_edges.size() == 4);

    Mesh m4 = build_unit_square_mesh(4);
    CHECK(m4.num_vertices() == 25);
    CHECK(m4.num_cells() == 32);
    CHECK(m4.total_area() == doctest::Approx(1.0).epsilon(1e-14));
    double amin = 1e30;
    for (int c = 0; c < m4.num_cells(); ++c) amin = std::min(amin, m4.cell_area(c));
    CHECK(amin == 1.0 / 32.0);
  }

  TEST_CASE("macro hierarchy") {
    Mesh m = build_unit_square_mesh(2, true);
    CHECK(m.num_vertices() == 9);
    CHECK(m.num_cells() == 8);
    REQUIRE(m.has_macro());
    CHECK(m.num_patches == 2);
    std::vector<int> children(m.num_patches, 0);
    for (int c = 0; c < m.num_cells(); ++c) ++children[(*m.parent_patch)[c]];
    for (int n : children) CHECK(n == 4);

    CHECK_THROWS_AS(build_unit_square_mesh(3, true), std::invalid_argument);
    CHECK_THROWS_AS(build_unit_square_mesh(0), std::invalid_argument);
  }

  TEST_CASE("uniform refinement") {
    Mesh coarse = build_unit_square_mesh(1);
    Mesh fine = refine_uniform(coarse);
    CHECK(fine.num_cells() == 8);
    CHECK(fine.total_area() == doctest::Approx(1.0).epsilon(1e-14));
    for (int c = 0; c < fine.num_cells(); ++c)
      CHECK(fine.h_K[c] == doctest::Approx(0.5 * coarse.h_K[(*fine.parent_patch)[c]]));

    // one refinement of n=2 matches the direct n=4 construction
    Mesh a = refine_uniform(build_unit_square_mesh(2));
    Mesh b = build_unit_square_mesh(4);
    CHECK(cell_signature(a) == cell_signature(b));

    // refined boundary covers the same polygon with doubled edge count
    CHECK(fine.boundary_edges.size() == 2 * coarse.boundary_edges.size());
    double blen = 0.0;
    for (const auto& e : fine.boundary_edges)
      blen += std::hypot(fine.vertices[e.a].x - fine.vertices[e.b].x,
                         fine.vertices[e.a].y - fine.vertices[e.b].y);
    CHECK(blen == doctest::Approx(4.0).epsilon(1e-13));
    validate_mesh(fine);
  }

  TEST_CASE("parser accepts and normalizes") {
    std::string text =
        "# two cells\n"
        "4 2 4\n"
        "0 0\n1 0\n1 1\n0 1\n"
        "0 1 2\n"
        "0 2 3\n"
        "0 1 0\n1 2 0\n2 3 0\n3 0 0\n";
    Mesh m = parse_mesh_string(text);
    CHECK(m.num_cells() == 2);
    validate_mesh(m);

    // clockwise cell is reoriented, not rejected
    std::string cw =
        "3 1 3\n0 0\n1 0\n0 1\n"
        "0 2 1\n"
        "0 1 0\n1 2 0\n2 0 0\n";
    Mesh t = parse_mesh_string(cw);
    CHECK(t.cell_area(0) == doctest::Approx(0.5));
  }

  TEST_CASE("parser rejects bad input with line numbers") {
    std::string bad_index =
        "3 1 3\n0 0\n1 0\n0 1\n"
        "0 1 7\n"
        "0 1 0\n1 2 0\n2 0 0\n";
    CHECK_THROWS_WITH_AS(parse_mesh_string(bad_index), doctest::Contains("line 5"),
                         std::runtime_error);

    std::string degenerate =
        "3 1 3\n0 0\n1 0\n2 0\n"
        "0 1 2\n"
        "0 1 0\n1 2 0\n2 0 0\n";
    CHECK_THROWS_WITH_AS(parse_mesh_string(degenerate), doctest::Contains("line 5"),
                         std::runtime_error);
  }

  TEST_CASE("serialize round trip is bit exact") {
    Mesh m = build_unit_square_mesh(3);
    std::string s1 = serialize_mesh(m);
    Mesh r = parse_mesh_string(s1);
    REQUIRE(r.num_vertices() == m.num_vertices());
    for (int v = 0; v < m.num_vertices(); ++v) {
      CHECK(r.vertices[v].x == m.vertices[v].x);
      CHECK(r.vertices[v].y == m.vertices[v].y);
    }
    CHECK(r.cells == m.cells);
    CHECK(serialize_mesh(r) == s1);
  }
}
