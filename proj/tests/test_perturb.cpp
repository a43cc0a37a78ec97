#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace qdefect;

TEST(Split, MatchesQuadraticRoot) {
  for (int i = 1; i <= 400; ++i) {
    const double d = kSqrt6 / 6.0 * i / 400.0;
    EXPECT_NEAR(split_from_delta(d).s, oracle::s_of_delta(d), 1e-14);
  }
}

TEST(Split, TraceAndNormIdentities) {
  for (int i = 0; i <= 1000; ++i) {
    const double d = kSqrt6 / 6.0 * i / 1000.0;
    const SplitEigenvalues sp = split_from_delta(d);
    EXPECT_NEAR(sp.s + sp.r + sp.delta, 0.0, 1e-14);
    // eigenvalues sqrt6/6 + s, sqrt6/6 + r, -sqrt6/3 + delta have unit square sum
    const double l1 = kSqrt6 / 6 + sp.s, l2 = kSqrt6 / 6 + sp.r, l3 = -kSqrt6 / 3 + sp.delta;
    EXPECT_NEAR(l1 * l1 + l2 * l2 + l3 * l3, 1.0, 1e-13);
  }
}

TEST(Split, OutOfRange) {
  EXPECT_THROW(split_from_delta(-1e-3), Error);
  EXPECT_THROW(split_from_delta(0.5), Error);
  EXPECT_THROW(delta_from_s(-0.1), Error);
  EXPECT_THROW(delta_from_s(0.5), Error);
}

TEST(Split, SmallDeltaExpansion) {
  std::vector<double> ds, defect;
  for (double d = 1e-6; d <= 1e-2; d *= 2.0) {
    const double lead = std::pow(1.5, 0.25) * std::sqrt(d) - d / 2;
    const double e = std::abs(split_from_delta(d).s - lead);
    EXPECT_LT(e / std::pow(d, 1.5), 1.0);
    ds.push_back(d);
    defect.push_back(e);
  }
  EXPECT_GE(oracle::loglog_slope(ds, defect), 1.4);
}

TEST(Split, DeltaRoundTrip) {
  for (int i = 0; i <= 500; ++i) {
    const double s = kSMax * i / 500.0;
    EXPECT_NEAR(split_from_delta(delta_from_s(s)).s, s, 1e-12);
  }
}

TEST(Tau, AgreesWithDirectDifferenceAndIsCubic) {
  for (int i = 1; i <= 50; ++i) {
    const double s = 0.05 + 0.3 * i / 50.0;
    // long double reference for delta(s) - sqrt6/3 s^2
    const long double ls = s;
    const long double r6 = std::sqrt(6.0L);
    const long double delta = (r6 - 2 * ls - std::sqrt(6 - 4 * r6 * ls - 12 * ls * ls)) / 4;
    const double ref = static_cast<double>(delta - r6 / 3 * ls * ls);
    EXPECT_NEAR(tau(s), ref, 1e-12 * std::abs(ref));
  }
  // tau ~ (2/3) s^3 near zero
  for (double s : {1e-4, 1e-3}) EXPECT_NEAR(tau(s) / (s * s * s), 2.0 / 3.0, 1e-2);
}

TEST(Decompose, ReconstructRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = oracle::random_unit(rng);
    const PlaneFrame fr = PlaneFrame::complete(p);
    const double phi = 6.283185307179586 * u(rng);
    const Vec3 n = std::cos(phi) * fr.e1 + std::sin(phi) * fr.e2;
    const double s = 0.005 + 0.3 * u(rng);
    const QTensor q = reconstruct(p, s, n);
    EXPECT_NEAR(q.norm(), 1.0, 1e-12);
    const Decomposition d = decompose(q);
    EXPECT_NEAR(d.s, s, 1e-9);
    EXPECT_NEAR(std::abs(d.p.dot(p)), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(d.n.dot(n)), 1.0, 1e-9);
    EXPECT_NEAR(d.U.norm(), kSqrt2 * s, 1e-9);
    // the remainder is the part of order s^2
    EXPECT_LT(d.R.norm(), 5.0 * s * s);
    const Mat3 sum = negative_uniaxial_part(d.p) + d.U.matrix() + d.R.matrix();
    EXPECT_LT((sum - q.matrix()).norm(), 1e-12);
  }
}

TEST(Decompose, NegativeUniaxialHasZeroU) {
  const Vec3 p = Vec3(1, 2, 2) / 3.0;
  const Decomposition d = decompose(make_uniaxial(p, Uniaxial::negative));
  EXPECT_NEAR(d.s, 0.0, 1e-12);
  EXPECT_LT(d.U.norm(), 1e-12);
  EXPECT_NEAR(std::abs(d.p.dot(p)), 1.0, 1e-12);
}

TEST(Decompose, Errors) {
  try {
    decompose(2.0 * make_uniaxial(Vec3::UnitZ(), Uniaxial::negative));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotUnitNorm);
  }
  try {
    decompose(make_uniaxial(Vec3::UnitZ(), Uniaxial::positive));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EigenvalueGapTooSmall);
  }
  try {
    reconstruct(Vec3::UnitZ(), 0.1, Vec3(1, 0, 1).normalized());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonOrthogonal);
  }
  EXPECT_THROW(reconstruct(Vec3(0, 0, 2), 0.1, Vec3::UnitX()), Error);
}

TEST(Decompose, CanonicalSign) {
  EXPECT_EQ(canonical_sign(Vec3(-1, 0, 0)), Vec3(1, 0, 0));
  EXPECT_EQ(canonical_sign(Vec3(0, -0.6, 0.8)), Vec3(0, 0.6, -0.8));
  EXPECT_EQ(canonical_sign(Vec3(0, 0, 0.5)), Vec3(0, 0, 0.5));
}
