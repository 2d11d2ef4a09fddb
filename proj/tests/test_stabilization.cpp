#include <doctest.h>

#include <cmath>

#include "stabfem/coercivity_lab.hpp"
#include "stabfem/stabilization.hpp"

using namespace stabfem;

namespace {

StabilizationConfig pconfig(PressureStab kind, double delta0 = 0.1) {
  StabilizationConfig c;
  c.pressure_kind = kind;
  c.delta0_p = delta0;
  return c;
}

StabilizationConfig vconfig(VelocityStab kind, double delta0 = 0.3) {
  StabilizationConfig c;
  c.velocity_kind = kind;
  c.delta0_v = delta0;
  return c;
}

Eigen::VectorXd nodal_pressure(const FeSpaces& s, const std::function<double(double, double)>& f) {
  Eigen::VectorXd p(s.qdim());
  for (int n = 0; n < s.num_nodes; ++n) p[n] = f(s.nodes[n].x, s.nodes[n].y);
  return p;
}

// direct quadrature of sum_K delta_K int |(u.grad)u|^2 for the
// streamline term, independent of the assembled residual
double supg_pairing_oracle(const FeSpaces& s, const StabilizationConfig& cfg,
                           const Eigen::VectorXd& u) {
  double total = 0.0;
  for (int c = 0; c < s.mesh->num_cells(); ++c) {
    double delta =
        cfg.delta0_v * s.mesh->h_K[c] / std::max(cell_linf_norm(s, u, c), cfg.clamp_eps);
    double cellsum = 0.0;
    for (const auto& qp : s.quad.points) {
      VelocitySample vs = sample_velocity(s, u, c, qp.x, qp.y);
      Eigen::Vector2d conv = vs.grad * vs.value;
      cellsum += qp.w * 2.0 * cell_geometry(*s.mesh, c).area * conv.squaredNorm();
    }
    total += delta * cellsum;
  }
  return total;
}

}  // namespace

TEST_SUITE("stabilization") {
  TEST_CASE("configuration validation") {
    Mesh plain = build_unit_square_mesh(4);
    Mesh macro = build_unit_square_mesh(4, true);
    FeSpaces p1 = build_spaces(plain, 1);
    FeSpaces p2 = build_spaces(plain, 2);
    FeSpaces m1 = build_spaces(macro, 1);

    CHECK_THROWS_AS(validate_config(p2, pconfig(PressureStab::bh)), std::invalid_argument);
    CHECK_THROWS_AS(validate_config(p1, pconfig(PressureStab::lps)), std::invalid_argument);
    CHECK_THROWS_AS(validate_config(p1, vconfig(VelocityStab::lps)), std::invalid_argument);
    StabilizationConfig bad = vconfig(VelocityStab::supg);
    bad.clamp_eps = 0.0;
    CHECK_THROWS_AS(validate_config(p1, bad), std::invalid_argument);
    StabilizationConfig neg = pconfig(PressureStab::bp, -1.0);
    CHECK_THROWS_AS(validate_config(p1, neg), std::invalid_argument);
    validate_config(m1, pconfig(PressureStab::lps));  // no throw
  }

  TEST_CASE("constants lie in every pressure kernel") {
    Mesh macro = build_unit_square_mesh(4, true);
    FeSpaces s = build_spaces(macro, 1);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.qdim());
    for (auto kind : {PressureStab::none, PressureStab::bp, PressureStab::bh, PressureStab::lps}) {
      SparseMat T = assemble_pressure_stab(s, pconfig(kind));
      CHECK((T * ones).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }

  TEST_CASE("interpolant form on a single triangle") {
    Mesh tri = parse_mesh_string(
        "3 1 3\n0 0\n1 0\n0 1\n"
        "0 1 2\n"
        "0 1 0\n1 2 0\n2 0 0\n");
    FeSpaces s = build_spaces(tri, 1);
    SparseMat T = assemble_pressure_stab(s, pconfig(PressureStab::bh));
    Eigen::Vector3d p(0.0, 0.0, 1.0);
    CHECK(p.dot(T * p) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
  }

  TEST_CASE("patch projection kills linear pressures") {
    Mesh macro = build_unit_square_mesh(4, true);
    FeSpaces s = build_spaces(macro, 1);
    SparseMat T = assemble_pressure_stab(s, pconfig(PressureStab::lps));
    Eigen::VectorXd lin = nodal_pressure(s, [](double x, double y) { return 3.0 * x - y + 2.0; });
    CHECK(std::abs(lin.dot(T * lin)) <= 1e-13);
  }

  TEST_CASE("pressure forms are symmetric positive semidefinite") {
    Mesh macro = build_unit_square_mesh(8, true);
    for (int k : {1, 2}) {
      FeSpaces s = build_spaces(macro, k);
      for (auto kind : {PressureStab::bp, PressureStab::bh, PressureStab::lps}) {
        if (kind == PressureStab::bh && k != 1) continue;
        Eigen::MatrixXd T(assemble_pressure_stab(s, pconfig(kind)));
        CHECK((T - T.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * T.cwiseAbs().maxCoeff());
      }
    }
  }

  TEST_CASE("gradient-seminorm lower bound for bp and bh") {
    // p^T T p >= c * sum_K h_K^2 |grad p|^2_K with c > 0, measured as a
    // generalized eigenvalue on the non-constant modes
    Mesh mesh = build_unit_square_mesh(4);
    FeSpaces s = build_spaces(mesh, 1);
    StabilizationConfig bp_unit = pconfig(PressureStab::bp, 1.0);
    Eigen::MatrixXd H(assemble_pressure_stab(s, bp_unit));  // the weighted stiffness itself
    for (auto kind : {PressureStab::bp, PressureStab::bh}) {
      Eigen::MatrixXd T(assemble_pressure_stab(s, pconfig(kind)));
      // deflate the shared constant kernel
      Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(s.qdim(), 1);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
      Eigen::MatrixXd Z = (qr.householderQ() * Eigen::MatrixXd::Identity(s.qdim(), s.qdim()))
                              .rightCols(s.qdim() - 1);
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
          Z.transpose() * T * Z, Z.transpose() * H * Z);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("velocity stabilization residual basics") {
    Mesh macro = build_unit_square_mesh(4, true);
    FeSpaces s = build_spaces(macro, 1);
    for (auto kind : {VelocityStab::lps, VelocityStab::supg}) {
      StabilizationConfig cfg = vconfig(kind);
      CHECK(velocity_stab_residual(s, cfg, Eigen::VectorXd::Zero(s.vdim())).norm() == 0.0);
    }

    // globally linear u has patchwise-constant gradient: lps fluctuation 0
    Eigen::VectorXd lin(s.vdim());
    for (int n = 0; n < s.num_nodes; ++n) {
      lin[2 * n] = 1.0 + 2.0 * s.nodes[n].x - s.nodes[n].y;
      lin[2 * n + 1] = 0.5 * s.nodes[n].x;
    }
    CHECK(velocity_stab_residual(s, vconfig(VelocityStab::lps), lin).cwiseAbs().maxCoeff() <=
          1e-12);
  }

  TEST_CASE("streamline pairing against direct quadrature") {
    Mesh mesh = build_unit_square_mesh(4);
    FeSpaces s = build_spaces(mesh, 1);
    StabilizationConfig cfg = vconfig(VelocityStab::supg);
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd u = rng.normal_vector(s.vdim());
      double pairing = velocity_stab_residual(s, cfg, u).dot(u);
      double oracle = supg_pairing_oracle(s, cfg, u);
      CHECK(pairing == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(pairing >= 0.0);
    }
  }

  TEST_CASE("nonnegative pairing and frozen-weight jacobian") {
    Mesh macro = build_unit_square_mesh(4, true);
    FeSpaces s = build_spaces(macro, 1);
    Rng rng(29);
    for (auto kind : {VelocityStab::lps, VelocityStab::supg}) {
      StabilizationConfig cfg = vconfig(kind);
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd u = rng.normal_vector(s.vdim());
        CHECK(velocity_stab_residual(s, cfg, u).dot(u) >= -1e-12);
      }
      // frozen-delta jacobian: S(u) equals J(u) acting on u for these
      // quadratic-in-u-with-frozen-weight forms only in the lps case;
      // both must at least be symmetric PSD
      Eigen::VectorXd u = rng.normal_vector(s.vdim());
      Eigen::MatrixXd J(velocity_stab_jacobian(s, cfg, u));
      if (kind == VelocityStab::lps) {
        CHECK((J - J.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((J * u - velocity_stab_residual(s, cfg, u)).cwiseAbs().maxCoeff() <= 1e-12);
      } else {
        // supg: frozen delta and frozen advection direction enter the
        // jacobian; check it against finite differences of the partially
        // frozen residual is impractical, so check the diagonal pairing
        CHECK(u.dot(J * u) >= -1e-10);
      }
    }
  }
}
