#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace qdefect;

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))) * 180.0 / M_PI;
}

const DefectCandidate& central(const std::vector<DefectCandidate>& c) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].position.norm() < c[best].position.norm()) best = i;
  return c[best];
}

}  // namespace

TEST(Detection, BetaAndSFields) {
  const GridSpec g(17);
  const QField f = synthetic_disclination(g, Vec3::UnitZ(), 0.1, DisclinationCase::half());
  const ScalarField b = beta_field(f), s = s_field(f);
  const std::size_t c = g.index(8, 8, 8);
  EXPECT_NEAR(b[c], -1.0, 1e-12);
  EXPECT_NEAR(s[c], 0.0, 1e-12);
  const std::size_t o = g.index(12, 8, 8);  // rho = 0.5
  EXPECT_NEAR(s[o], 0.05, 1e-10);
  EXPECT_GT(b[o], -1.0);
}

TEST(Detection, LineClusterAndCorePoints) {
  const GridSpec g(33);
  const QField f = synthetic_disclination(g, Vec3::UnitZ(), 0.1, DisclinationCase::half());
  AnalysisConfig cfg;
  cfg.beta_threshold = 0.01;
  const ScalarField beta = beta_field(f);
  const auto cl = find_clusters(f, beta, cfg);
  ASSERT_EQ(cl.size(), 1u);
  EXPECT_NEAR(principal_direction(g, cl[0].nodes).cwiseAbs().z(), 1.0, 1e-9);
  for (const Vec3& x : core_points(f, beta, cl[0])) EXPECT_LT(std::hypot(x[0], x[1]), 1e-6);
  const auto cands = detect_candidates(f, cfg);
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_LT(cands[0].position.norm(), 1e-9);
  EXPECT_TRUE(cands[0].is_defect);
}

TEST(Detection, UniformFieldHasNoCandidates) {
  EXPECT_TRUE(detect_candidates(uniform_field(GridSpec(17), Vec3::UnitX())).empty());
}

TEST(Winding, HalfDegreeAndOrientationOdd) {
  const GridSpec g(33);
  const Vec3 axis = Vec3(0.3, 0.2, 0.93).normalized();
  const QField f = synthetic_disclination(g, axis, 0.1, DisclinationCase::half());
  const auto loop = circle_loop(Vec3::Zero(), axis, 0.3, 48);
  const WindingResult w = winding_number(f, loop, axis);
  EXPECT_TRUE(w.resolved);
  EXPECT_EQ(std::abs(w.value), 0.5);
  const std::vector<Vec3> rev(loop.rbegin(), loop.rend());
  EXPECT_EQ(winding_number(f, rev, axis).value, -w.value);
}

TEST(Winding, VortexOfDegreeTwoWindsOnce) {
  const GridSpec g(33);
  const QField f = synthetic_vortex(g, Vec3::UnitZ(), 0.1, 2);
  EXPECT_EQ(std::abs(winding_number(f, circle_loop(Vec3::Zero(), Vec3::UnitZ(), 0.4, 64), Vec3::UnitZ()).value), 1.0);
}

TEST(Winding, DegenerateSampleOnTheLine) {
  const GridSpec g(33);
  const QField f = synthetic_disclination(g, Vec3::UnitZ(), 0.1, DisclinationCase::half());
  // loop crossing the defect line itself
  const auto loop = circle_loop(Vec3(0.2, 0, 0), Vec3::UnitZ(), 0.2, 32);
  try {
    winding_number(f, loop, Vec3::UnitZ());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
  }
}

TEST(VanishingOrder, RecoversVortexDegree) {
  const GridSpec g(33);
  for (int k : {1, 2, 3}) {
    const QField f = synthetic_vortex(g, Vec3::UnitZ(), 0.1, k);
    const VanishingOrder vo = vanishing_order(f, Vec3::Zero());
    EXPECT_NEAR(vo.k_hat, k, 0.05) << "k = " << k;
    EXPECT_LT(vo.residual, 0.05);
  }
  EXPECT_THROW(vanishing_order(synthetic_vortex(g, Vec3::UnitZ(), 0.1, 1), Vec3::Zero(), {0.4, 0.01}), Error);
}

TEST(BlowUp, FitRecoversLinearMap) {
  const GridSpec g(33);
  const Vec3 axis = Vec3(0.3, 0.2, 0.93).normalized();
  const QField f = synthetic_disclination(g, axis, 0.1, DisclinationCase::half());
  const BlowUpSamples smp = blow_up(f, Vec3::Zero(), 0.25, 1, g.h() / 0.25);
  const TangentMapFit fit = fit_tangent_map(smp, 1, axis);
  EXPECT_LT(fit.residual, 1e-3);
  const Classification c = classify(fit);
  EXPECT_EQ(c.kind, Classification::half_degree_line);
  EXPECT_LT(angle_deg(*c.axis, axis), 0.5);
  // the blown-up map has |U| = sqrt2 A rho
  EXPECT_NEAR(fit.poly.dirichlet_integral(), 4 * 0.01 * 4 * M_PI / 3, 1e-3);
}

TEST(BlowUp, ExchangeIsClassifiedAsPlane) {
  const GridSpec g(33);
  const QField f = synthetic_disclination(g, Vec3::UnitZ(), 0.1, DisclinationCase::exch(2.0));
  const TangentMapFit fit = fit_tangent_map(blow_up(f, Vec3::Zero(), 0.25, 1, g.h() / 0.25), 1, Vec3::UnitZ());
  EXPECT_EQ(classify(fit).kind, Classification::exchange_plane);
}

TEST(BlowUp, ResidualGuard) {
  TangentMapFit fit;
  fit.residual = 0.5;
  try {
    classify(fit);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResidualTooLarge);
  }
  BlowUpSamples few;
  few.y = {Vec3::Zero()};
  few.U = {Mat3::Zero()};
  EXPECT_THROW(fit_tangent_map(few, 1, Vec3::UnitZ()), Error);
}

TEST(Ym, ConstantDirectorGivesZero) {
  const GridSpec g(33);
  const QField f = synthetic_x1x2(g, 0.1);
  const VPoly v = compute_Vm(f, Vec3::Zero(), 2);
  EXPECT_LT(v.coeffs[0].norm(), 1e-10);
  const auto sup = check_Ym_vanishing(f, Vec3::Zero(), 4);
  ASSERT_EQ(sup.size(), 2u);
  for (double s : sup) EXPECT_LT(s, 1e-8);
}

TEST(Ym, RotatingDirectorGivesNonzeroY2) {
  // p(x) = (0, sin(c y), cos(c y)) with U = 0: V_2 = c^2 e2 e2, |Y_2| = c^2 / sqrt2
  const GridSpec g(33);
  const double c = 0.5;
  const QField f = synthetic_field(g, [c](const Vec3& x) {
    return TangentSpec{Vec3(0, std::sin(c * x[1]), std::cos(c * x[1])), Mat3::Zero()};
  });
  const TangentPolynomial y = compute_Ym(compute_Vm(f, Vec3::Zero(), 2), Vec3::UnitZ());
  EXPECT_NEAR(sphere_sup(y), c * c / std::sqrt(2.0), 1e-4);
}

TEST(TangentLine, BentLineProfileShrinksLinearly) {
  const GridSpec g(121);
  const QField f = synthetic_bent_line(g, 0.1, 1.0);
  AnalysisConfig cfg;
  cfg.beta_threshold = 0.01;
  const ScalarField beta = beta_field(f);
  const auto cl = find_clusters(f, beta, cfg);
  ASSERT_EQ(cl.size(), 1u);
  const ConeProfile prof = tangent_line_check(core_points(f, beta, cl[0]), Vec3::Zero(), Vec3::UnitZ());
  ASSERT_EQ(prof.entries.size(), 3u);
  std::vector<double> r, v;
  for (const auto& e : prof.entries) {
    r.push_back(e.radius);
    v.push_back(e.ball_max);
  }
  EXPECT_GT(v[0], v[1]);
  EXPECT_GT(v[1], v[2]);
  EXPECT_NEAR(oracle::loglog_slope(r, v), 1.0, 0.15);
}

TEST(TangentLine, PlanarPointsAreFlagged) {
  std::vector<Vec3> pts;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) pts.push_back(Vec3(0.04 * i, 0.04 * j, 0));
  const ConeProfile prof = tangent_line_check(pts, Vec3::Zero(), Vec3::UnitX());
  EXPECT_TRUE(prof.flagged);
  std::vector<Vec3> sparse{Vec3(0.3, 0, 0)};
  try {
    tangent_line_check(sparse, Vec3::Zero(), Vec3::UnitX());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientCandidates);
  }
}

TEST(Pipeline, RotationEquivariance) {
  const GridSpec g(33);
  for (const Vec3& axis : {Vec3(0, 0, 1), Vec3(0.3, 0.2, 0.93).normalized(), Vec3(1, 1, 1).normalized()}) {
    const auto cands = analyze(synthetic_disclination(g, axis, 0.1, DisclinationCase::half()));
    ASSERT_FALSE(cands.empty());
    const DefectCandidate& d = central(cands);
    ASSERT_EQ(d.classification, "half_degree_line") << d.note;
    EXPECT_LT(angle_deg(*d.axis, axis), 2.0);
  }
}

TEST(Pipeline, HigherOrderX1X2) {
  const auto cands = analyze(synthetic_x1x2(GridSpec(33), 0.1));
  ASSERT_FALSE(cands.empty());
  const DefectCandidate& d = central(cands);
  EXPECT_EQ(d.classification, "higher_order(2)");
  ASSERT_TRUE(d.ek_residual.has_value());
  EXPECT_LT(*d.ek_residual, 1e-8);
  ASSERT_TRUE(d.axis.has_value());
  EXPECT_LT(angle_deg(*d.axis, Vec3::UnitZ()), 2.0);
}

TEST(Pipeline, ReportJson) {
  DefectCandidate d;
  d.position = Vec3(0.1, 0, 0);
  d.k = 1;
  d.winding = 0.5;
  const nlohmann::json j = report_json({d}, "abc");
  EXPECT_EQ(j["schema"], "defect-report/1");
  EXPECT_EQ(j["config_hash"], "abc");
  ASSERT_EQ(j["candidates"].size(), 1u);
  EXPECT_EQ(j["candidates"][0]["k"], 1);
  EXPECT_TRUE(j["candidates"][0]["axis"].is_null());
}
