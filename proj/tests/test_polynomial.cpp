#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace qdefect;

TEST(Monomials, IndexMatchesEnumeration) {
  for (int k = 0; k <= 6; ++k) {
    const auto ms = monomials(k);
    ASSERT_EQ(static_cast<int>(ms.size()), monomial_count(k));
    for (int i = 0; i < static_cast<int>(ms.size()); ++i) EXPECT_EQ(monomial_index(k, ms[i]), i);
  }
}

TEST(Monomials, BallIntegralsAgainstQuadrature) {
  // spherical-shell midpoint rule over r, Gauss-free angular grid
  auto quad = [](const Exponent& e) {
    const int nr = 60, nt = 120, np = 240;
    double sum = 0;
    for (int a = 0; a < nr; ++a) {
      const double r = (a + 0.5) / nr;
      for (int b = 0; b < nt; ++b) {
        const double th = (b + 0.5) * M_PI / nt;
        for (int c = 0; c < np; ++c) {
          const double ph = (c + 0.5) * 2 * M_PI / np;
          const Vec3 x(r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th));
          sum += monomial_value(e, x) * r * r * std::sin(th);
        }
      }
    }
    return sum * (1.0 / nr) * (M_PI / nt) * (2 * M_PI / np);
  };
  EXPECT_NEAR(ball_monomial_integral({0, 0, 0}), 4 * M_PI / 3, 1e-14);
  EXPECT_NEAR(ball_monomial_integral({2, 0, 0}), 4 * M_PI / 15, 1e-14);
  for (const Exponent& e : {Exponent{2, 2, 0}, Exponent{4, 0, 2}, Exponent{2, 2, 2}}) {
    EXPECT_NEAR(ball_monomial_integral(e), quad(e), 1e-4);
  }
  EXPECT_EQ(ball_monomial_integral({1, 2, 0}), 0.0);
}

TEST(HomPoly, CalculusOfX1X2) {
  HomPoly p(2);
  p[{1, 1, 0}] = 3.0;
  EXPECT_DOUBLE_EQ(p(Vec3(2, 5, 7)), 30.0);
  const HomPoly dx = p.derivative(0);
  EXPECT_EQ(dx.degree(), 1);
  EXPECT_DOUBLE_EQ(dx(Vec3(2, 5, 7)), 15.0);
  EXPECT_DOUBLE_EQ(p.laplacian().max_abs_coeff(), 0.0);
  // int_B |grad(3 x y)|^2 = 9 int_B (x^2 + y^2) = 9 * 8 pi / 15
  EXPECT_NEAR(ball_gradient_inner(p, p), 9.0 * 8.0 * M_PI / 15.0, 1e-12);
}

TEST(HomPoly, ProductAndLaplacian) {
  HomPoly a(1), b(1);
  a[{1, 0, 0}] = 1.0;
  b[{1, 0, 0}] = 1.0;
  b[{0, 0, 1}] = -2.0;
  const HomPoly c = a * b;  // x^2 - 2 x z
  EXPECT_EQ(c.degree(), 2);
  EXPECT_DOUBLE_EQ(c(Vec3(1.5, 0.3, -0.4)), 1.5 * 1.5 + 2 * 1.5 * 0.4);
  EXPECT_DOUBLE_EQ(c.laplacian().coeffs()[0], 2.0);
  EXPECT_TRUE(HomPoly(1).laplacian().is_zero_space());
}

TEST(TangentPolynomial, FrameChangePreservesValues) {
  const Vec3 p = Vec3(0.3, 0.2, 0.93).normalized();
  PlaneFrame f1 = PlaneFrame::complete(p);
  PlaneFrame f2 = f1;
  const double a = 0.7;
  f2.e1 = std::cos(a) * f1.e1 + std::sin(a) * f1.e2;
  f2.e2 = p.cross(f2.e1);
  HomPoly u1(2), u2(2);
  u1[{2, 0, 0}] = 1.0;
  u2[{0, 1, 1}] = -0.5;
  const TangentPolynomial t{f1, u1, u2};
  const TangentPolynomial s = t.in_frame(f2);
  for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(-0.5, 0.4, 0.1)}) EXPECT_LT((t(x) - s(x)).norm(), 1e-14);
  EXPECT_NEAR(t.dirichlet_integral(), s.dirichlet_integral(), 1e-13);
}
