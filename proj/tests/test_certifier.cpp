#include "test_util.hpp"
#include "zfcert/certifier.hpp"
#include "zfcert/plants.hpp"

using namespace zfcert;

namespace {

MultiplierConfig config(MultiplierClass cls, int nu = 1, PositivityPolicy pol = PositivityPolicy::Published) {
  MultiplierConfig c;
  c.cls = cls;
  c.order = nu;
  c.positivity = pol;
  return c;
}

bool feasible_at(const PlantModel& p, const SectorBounds& s, const MultiplierConfig& c, double alpha) {
  return check_feasible(rate_problem(p.vertices, s, c, alpha)).feasible();
}

constexpr double kGrid = 1.0 / 8192.0;

}  // namespace

TEST(AssembleLmi, NonminPhaseAroundTheBoundary) {
  PlantModel p = nonmin_phase_example();
  EXPECT_TRUE(feasible_at(p, {1.0, 1.0}, config(MultiplierClass::FullZF), 0.25));
  EXPECT_FALSE(feasible_at(p, {1.0, 1.0}, config(MultiplierClass::FullZF), 0.26));
}

TEST(AssembleLmi, LpvOrderFiveAroundTheBoundary) {
  PlantModel p = lpv_vehicle_example();
  EXPECT_TRUE(feasible_at(p, {1.0, 29.0}, config(MultiplierClass::FullZF, 5), 0.39));
  EXPECT_FALSE(feasible_at(p, {1.0, 29.0}, config(MultiplierClass::FullZF, 5), 0.41));
}

TEST(AssembleLmi, CircleCriterionNearEdge) {
  EXPECT_TRUE(feasible_at(nonmin_phase_example(), {1.0, 1.9}, config(MultiplierClass::CircleCriterion),
                          0.0164794921875));
}

TEST(AssembleLmi, ConstraintInventory) {
  PlantModel p = lpv_vehicle_example();
  SdpProblem strict = rate_problem(p.vertices, {1.0, 3.0}, config(MultiplierClass::FullZF, 3, PositivityPolicy::Strict), 0.1);
  std::vector<std::string> names;
  for (const auto& c : strict.constraints()) names.push_back(c.name);
  EXPECT_EQ(names, (std::vector<std::string>{"X", "rate[0]", "rate[1]", "l1", "kernel1", "kernel3"}));
  EXPECT_TRUE(strict.has_variable("X1") && strict.has_variable("X3"));
  SdpProblem cc = rate_problem(p.vertices, {1.0, 3.0}, config(MultiplierClass::CircleCriterion), 0.1);
  EXPECT_FALSE(cc.has_variable("P1") || cc.has_variable("P3"));
  EXPECT_THROW(assemble_lmi_lpv({}, 0.1, config(MultiplierClass::FullZF), build_basis(1, -1.0), 1), InvalidArgument);
}

TEST(AssembleLmi, DimensionMismatchThrows) {
  PlantModel p = nonmin_phase_example();
  ZfBasis z = build_basis(1, -1.0);
  StateSpace ic = build_interconnection(build_psi(z, {1.0, 2.0}, 0.0, 1), p.lti());
  EXPECT_THROW(assemble_lmi(ic, 0.0, config(MultiplierClass::FullZF, 2), build_basis(2, -1.0), 1), DimensionError);
}

TEST(CertifyRate, NonminPhaseGridValues) {
  PlantModel p = nonmin_phase_example();
  RateEstimate e = certify_rate(p.vertices, {1.0, 1.0}, config(MultiplierClass::FullZF), 0.5, kGrid);
  EXPECT_FALSE(e.infeasible_at_zero);
  EXPECT_NEAR(e.alpha_star, 0.2520751953125, 0.003);
  // Grid multiple.
  EXPECT_DOUBLE_EQ(std::round(e.alpha_star / kGrid) * kGrid, e.alpha_star);
  EXPECT_NEAR(e.alpha_star, 0.2523193359375, 1e-12);
  EXPECT_FALSE(e.at_bracket_top);

  RateEstimate bad = certify_rate(p.vertices, {1.0, 2.5}, config(MultiplierClass::FullZF));
  EXPECT_TRUE(bad.infeasible_at_zero);
  EXPECT_EQ(bad.reported(), -1.0);
}

TEST(CertifyRate, LpvOrderOne) {
  PlantModel p = lpv_vehicle_example();
  RateEstimate e = certify_rate(p.vertices, {1.0, 29.0}, config(MultiplierClass::FullZF));
  EXPECT_NEAR(e.alpha_star, 0.123291015625, 0.01);
}

TEST(CertifyRate, BracketTopIsReported) {
  PlantModel p = nonmin_phase_example();
  RateEstimate e = certify_rate(p.vertices, {1.0, 1.0}, config(MultiplierClass::FullZF), 0.1, kGrid);
  EXPECT_TRUE(e.at_bracket_top);
  EXPECT_NEAR(e.alpha_star, std::floor(0.1 / kGrid) * kGrid, 1e-15);
}

TEST(CertifyRate, LogIsMonotoneInFeasibility) {
  PlantModel p = nonmin_phase_example();
  RateEstimate e = certify_rate(p.vertices, {1.0, 1.7}, config(MultiplierClass::AntiCausalZF));
  double max_feasible = -1.0, min_infeasible = 1e9;
  for (const auto& s : e.log) {
    if (s.status == FeasibilityStatus::Feasible)
      max_feasible = std::max(max_feasible, s.alpha);
    else
      min_infeasible = std::min(min_infeasible, s.alpha);
  }
  EXPECT_LT(max_feasible, min_infeasible);
  EXPECT_EQ(max_feasible, e.alpha_star);
  EXPECT_LE(min_infeasible - max_feasible, kGrid + 1e-15);
}

TEST(CertifyRate, FeasibilityIsMonotoneInAlpha) {
  PlantModel p = nonmin_phase_example();
  const SectorBounds s(1.0, 1.8);
  bool prev = true;
  for (double a = 0.0; a <= 0.3; a += 0.02) {
    const bool f = feasible_at(p, s, config(MultiplierClass::FullZF), a);
    if (!prev) EXPECT_FALSE(f) << "alpha " << a;
    prev = f;
  }
}

TEST(CertifyRate, ClassNestingAtOnePoint) {
  PlantModel p = nonmin_phase_example();
  const SectorBounds s(1.0, 1.6);
  auto rate = [&](MultiplierClass c) { return certify_rate(p.vertices, s, config(c)).reported(); };
  const double cc = rate(MultiplierClass::CircleCriterion), ca = rate(MultiplierClass::CausalZF),
               ac = rate(MultiplierClass::AntiCausalZF), zf = rate(MultiplierClass::FullZF);
  EXPECT_LE(cc, ca + 2 * kGrid);
  EXPECT_LE(ca, zf + 2 * kGrid);
  EXPECT_LE(ac, zf + 2 * kGrid);
}

TEST(CertifyRate, HigherOrderNeverWorse) {
  PlantModel p = lpv_vehicle_example();
  double prev = -1.0;
  for (int nu : {1, 2, 3}) {
    const double a = certify_rate(p.vertices, {1.0, 9.0}, config(MultiplierClass::FullZF, nu)).reported();
    EXPECT_GE(a, prev - 2 * kGrid) << "nu " << nu;
    prev = a;
  }
}

TEST(CertifyRate, IdenticalModesMatchLti) {
  QuadrotorMode m{1.0, {1.0, 3.0}, 2.0};
  PlantModel two = two_mode_quadrotor(m, m);
  PlantModel one = quadrotor_surrogate({1.0, 3.0}, 1.0, 2.0);
  const SectorBounds s(1.0, 4.0);
  EXPECT_EQ(certify_rate(two.vertices, s, config(MultiplierClass::FullZF)).alpha_star,
            certify_rate(one.vertices, s, config(MultiplierClass::FullZF)).alpha_star);
}

TEST(CertifyRate, StrictWitnessKernelIsNonnegativeAndBounded) {
  PlantModel p = lpv_vehicle_example();
  MultiplierConfig c = config(MultiplierClass::FullZF, 3, PositivityPolicy::Strict);
  RateEstimate e = certify_rate(p.vertices, {1.0, 5.0}, c);
  ASSERT_FALSE(e.infeasible_at_zero);
  const Vector& y = e.witness.witness;
  Matrix p1 = e.problem.value("P1", y), p3 = e.problem.value("P3", y);
  const double h = e.problem.value("H", y)(0, 0);
  ZfBasis z = build_basis(c);
  double integral = 0.0;
  const double dt = 1e-3;
  for (int k = -60000; k <= 60000; ++k) {
    const double v = h_eval(z, p1, p3, k * dt);
    EXPECT_GE(v, -1e-9) << "t " << k * dt;
    integral += std::abs(v) * dt;
  }
  EXPECT_LE(integral, h * (1.0 + 1e-3));
}

TEST(CertifyRate, DefaultBracket) {
  PlantModel p = lpv_vehicle_example();
  // Slowest nonzero open-loop mode of the vehicle sets the bracket.
  const double a = default_alpha_max(p.vertices);
  EXPECT_GT(a, 0.4);
  EXPECT_LE(a, 10.0);
  EXPECT_THROW(certify_rate(p.vertices, {1.0, 2.0}, config(MultiplierClass::FullZF), 0.5, 0.0), InvalidArgument);
}
