#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace qdefect;

TEST(Grid, RejectsBadSizes) {
  EXPECT_THROW(GridSpec(8), Error);
  EXPECT_THROW(GridSpec(7), Error);
  EXPECT_NO_THROW(GridSpec(9));
}

TEST(Grid, CoordinatesAndIndexing) {
  const GridSpec g(17);
  EXPECT_DOUBLE_EQ(g.h(), 0.125);
  EXPECT_DOUBLE_EQ(g.coord(0), -1.0);
  EXPECT_DOUBLE_EQ(g.coord(8), 0.0);
  EXPECT_DOUBLE_EQ(g.coord(16), 1.0);
  for (std::size_t idx : {std::size_t(0), std::size_t(1234), g.size() - 1}) {
    const auto [i, j, k] = g.ijk(idx);
    EXPECT_EQ(g.index(i, j, k), idx);
  }
  const auto n = g.nearest(Vec3(0.06, -0.05, 2.0));
  EXPECT_EQ(n[0], 8);
  EXPECT_EQ(n[1], 8);
  EXPECT_EQ(n[2], 16);
}

TEST(Grid, RolesAgreeWithGeometry) {
  const GridSpec g(33);
  const double h = g.h();
  int interior = 0, shell = 0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    const auto [i, j, k] = g.ijk(a);
    const double r = g.position(a).norm();
    switch (g.role(i, j, k)) {
      case NodeRole::interior:
        ++interior;
        EXPECT_LT(r, 1.0 - h + 1e-12);
        break;
      case NodeRole::shell:
        ++shell;
        EXPECT_GE(r, 1.0 - h - 1e-12);
        EXPECT_LT(r, 1.0 + std::sqrt(3.0) * h);
        break;
      case NodeRole::exterior:
        EXPECT_GE(r, 1.0 + std::sqrt(3.0) * h - 1e-12);
        break;
    }
  }
  EXPECT_GT(interior, 0);
  EXPECT_GT(shell, 0);
  // every interior node has six non-exterior neighbours
  for (std::size_t a = 0; a < g.size(); ++a) {
    const auto [i, j, k] = g.ijk(a);
    if (g.role(i, j, k) != NodeRole::interior) continue;
    for (int d = -1; d <= 1; d += 2) {
      EXPECT_NE(g.role(i + d, j, k), NodeRole::exterior);
      EXPECT_NE(g.role(i, j + d, k), NodeRole::exterior);
      EXPECT_NE(g.role(i, j, k + d), NodeRole::exterior);
    }
  }
}

TEST(Sample, ReproducesNodesAndRejectsOutside) {
  const GridSpec g(17);
  const QField f = hedgehog_boundary(g);
  const Vec3 x = g.position(10, 7, 9);
  EXPECT_LT((sample(f, x) - f.at(10, 7, 9)).norm(), 1e-14);
  try {
    sample(f, Vec3(0.95, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfDomain);
  }
}

TEST(Gradient, CentralDifferencesAndInteriorOnly) {
  const GridSpec g(17);
  QField f(g);
  // linear coefficient field: exact central differences
  for (std::size_t a = 0; a < f.size(); ++a) {
    const Vec3 x = g.position(a);
    f[a] = QTensor(x[0], 2 * x[1], -x[2], 0.5, x[0] + x[1]);
  }
  const Gradient d = gradient(f, 8, 8, 8);
  EXPECT_NEAR(d(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(d(1, 1), 2.0, 1e-12);
  EXPECT_NEAR(d(2, 2), -1.0, 1e-12);
  EXPECT_NEAR(d(1, 4), 1.0, 1e-12);
  EXPECT_NEAR(d(2, 3), 0.0, 1e-12);
  EXPECT_THROW(gradient(f, 0, 8, 8), Error);
  EXPECT_THROW(gradient(f, 8, 8, 16), Error);
}

TEST(Hedgehog, BoundaryIsRadialAndUnitNorm) {
  const GridSpec g(17);
  const QField f = hedgehog_boundary(g);
  EXPECT_LT(f.max_norm_deviation(), 1e-12);
  for (std::size_t a = 0; a < f.size(); ++a) {
    if (f.role(a) != NodeRole::shell) continue;
    const Vec3 x = g.position(a).normalized();
    EXPECT_NEAR(std::abs(eigen_decompose(f[a]).n.dot(x)), 1.0, 1e-10);
  }
  EXPECT_EQ(std::abs(boundary_degree(f)), 1);
}

TEST(Hedgehog, RandomTangentInitIsSeeded) {
  const GridSpec g(17);
  HedgehogInit init;
  init.rule = InitRule::random_tangent;
  init.seed = 5;
  const QField a = hedgehog_boundary(g, init), b = hedgehog_boundary(g, init);
  EXPECT_EQ(a.values(), b.values());
  init.seed = 6;
  const QField c = hedgehog_boundary(g, init);
  EXPECT_NE(a.values(), c.values());
  EXPECT_LT(a.max_norm_deviation(), 1e-12);
}

TEST(BoundaryDegree, UniformIsZeroAndNegativeUniaxialFails) {
  const GridSpec g(17);
  EXPECT_EQ(boundary_degree(uniform_field(g, Vec3(0, 0, 1))), 0);
  QField f = uniform_field(g, Vec3::UnitZ());
  for (std::size_t a = 0; a < f.size(); ++a) {
    if (f.role(a) == NodeRole::shell) f[a] = make_uniaxial(Vec3::UnitZ(), Uniaxial::negative);
  }
  try {
    boundary_degree(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBoundary);
  }
}

TEST(Icosphere, ClosedOutwardSurface) {
  const Icosphere s = make_icosphere(2);
  double total = 0;
  for (const auto& t : s.faces) total += signed_solid_angle(s.vertices[t[0]], s.vertices[t[1]], s.vertices[t[2]]);
  EXPECT_NEAR(total, 4 * M_PI, 1e-10);
  EXPECT_EQ(s.faces.size(), 20u * 16u);
}

TEST(Synthetic, HalfDegreeHasPrescribedS) {
  const GridSpec g(17);
  const Vec3 axis = Vec3(0.3, 0.2, 0.93).normalized();
  const double A = 0.1;
  const QField f = synthetic_disclination(g, axis, A, DisclinationCase::half());
  for (std::size_t a = 0; a < f.size(); a += 7) {
    if (f.role(a) == NodeRole::exterior) continue;
    const Vec3 x = g.position(a);
    const double rho = (x - x.dot(axis) * axis).norm();
    const EigenSystem es = eigen_decompose(f[a]);
    EXPECT_NEAR(es.values[0] - kSqrt6 / 6, A * rho, 1e-10);
    EXPECT_NEAR(std::abs(es.p.dot(axis)), 1.0, 1e-8);
  }
}

TEST(Synthetic, AmplitudeGuard) {
  const GridSpec g(9);
  try {
    synthetic_x1x2(g, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AmplitudeTooLarge);
  }
  EXPECT_THROW(tensor_from_tangent(Vec3::UnitZ(), PlaneFrame::complete(Vec3::UnitZ()).E1()), Error);
}
