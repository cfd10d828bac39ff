#include "test_util.hpp"
#include "zfcert/iqc_suite.hpp"

using namespace zfcert;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

MultiplierConfig strict(MultiplierClass c, int nu) {
  MultiplierConfig m;
  m.cls = c;
  m.order = nu;
  m.positivity = PositivityPolicy::Strict;
  return m;
}

struct LoopRun {
  Trajectory tr;
  SignalPair sig;
  Vector eta_star;
};

LoopRun run_loop(const PlantModel& p, const FieldSpec& f, const Vector& dx0, double dt = 2e-3, double horizon = 20.0) {
  LoopRun r;
  Vector y_star = field_minimizer(f);
  r.eta_star = equilibrium_state(p, y_star);
  r.tr = simulate_closed_loop(p, f, r.eta_star + dx0, dt, horizon);
  r.sig = make_signals(r.tr, f, f.sector, y_star);
  return r;
}

// Signals of the linear field ũ = kỹ with ỹ(t) = e^{−σt}.
SignalPair linear_signals(double k, double sigma, const SectorBounds& s, double dt, double horizon) {
  SignalPair sig;
  sig.dt = dt;
  sig.sector = s;
  const long n = std::lround(horizon / dt);
  for (long i = 0; i <= n; ++i) {
    Vector y = vec({std::exp(-sigma * i * dt)});
    Vector u = k * y;
    sig.ytil.push_back(y);
    sig.util.push_back(u);
    sig.p.push_back(u - s.m * y);
    sig.q.push_back(s.l * y - u);
  }
  return sig;
}

}  // namespace

TEST(Signals, EquilibriumAndSectorEdges) {
  PlantModel p = nonmin_phase_example();
  const SectorBounds s(1.0, 2.0);
  FieldSpec f = FieldSpec::curvature(1.5, vec({0.3}), s);
  LoopRun eq = run_loop(p, f, Vector::Zero(3), 1e-2, 5.0);
  for (size_t k = 0; k < eq.sig.size(); ++k) {
    EXPECT_LT(eq.sig.p[k].norm(), 1e-12);
    EXPECT_LT(eq.sig.q[k].norm(), 1e-12);
  }
  LoopRun lo = run_loop(p, FieldSpec::curvature(1.0, vec({0.3}), s), vec({0.5, 0.0, 0.0}), 1e-2, 5.0);
  for (const auto& v : lo.sig.p) EXPECT_LT(v.norm(), 1e-12);
  LoopRun hi = run_loop(p, FieldSpec::curvature(2.0, vec({0.3}), s), vec({0.5, 0.0, 0.0}), 1e-2, 5.0);
  for (const auto& v : hi.sig.q) EXPECT_LT(v.norm(), 1e-12);
}

TEST(ShiftedSector, ZeroShiftIsExactlyZero) {
  LoopRun r = run_loop(lpv_vehicle_example(), FieldSpec::curvature(2.0, vec({1.0}), {1.0, 3.0}), vec({0.5, -0.2}));
  WeightedResidual w = lemma1_residual(r.sig, 0.1, 0.0, 20.0);
  EXPECT_EQ(w.value, 0.0);
}

TEST(ShiftedSector, ShiftedResidualsAreNonnegative) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uk(1.0, 3.0);
  for (int trial = 0; trial < 4; ++trial) {
    LoopRun r = run_loop(lpv_vehicle_example(), FieldSpec::curvature(uk(rng), vec({1.0}), {1.0, 3.0}),
                test::random_matrix(rng, 2, 1));
    for (double tau : {0.7, -0.7, 1.5, -2.0}) {
      WeightedResidual w = lemma1_residual(r.sig, 0.1, tau, 20.0);
      EXPECT_GE(w.relative(), -1e-6) << "tau " << tau;
    }
  }
  EXPECT_THROW(lemma1_residual(linear_signals(2.0, 0.1, {1.0, 3.0}, 0.1, 5.0), 0.1, 0.05, 5.0), InvalidArgument);
  EXPECT_THROW(lemma1_residual(linear_signals(2.0, 0.1, {1.0, 3.0}, 0.1, 5.0), 0.1, 0.0, 50.0), InvalidArgument);
}

TEST(MultiplierIqc, CircleCriterionIsSectorPositivity) {
  LoopRun r = run_loop(nonmin_phase_example(), FieldSpec::scaled_smooth(vec({0.2}), 0.5, {1.0, 1.5}), vec({0.4, 0.0, 0.0}));
  ZfBasis z = build_basis(1, -1.0);
  Matrix zero = Matrix::Zero(1, 1);
  EXPECT_GE(theorem2_residual(r.sig, z, 1.0, zero, zero, 0.1, 20.0).relative(), -1e-12);
}

TEST(MultiplierIqc, ZeroTrajectoryIsZero) {
  SignalPair sig = linear_signals(2.0, 0.0, {1.0, 3.0}, 0.1, 5.0);
  for (auto& v : sig.p) v.setZero();
  for (auto& v : sig.q) v.setZero();
  ZfBasis z = build_basis(2, -1.0);
  WeightedResidual w = theorem2_residual(sig, z, 1.0, Matrix::Ones(1, 2), Matrix::Ones(1, 2), 0.1, 5.0);
  EXPECT_EQ(w.value, 0.0);
  EXPECT_EQ(w.relative(), 0.0);
}

TEST(MultiplierIqc, CertifiedWitnessOnNonminPhase) {
  IqcCase c = make_iqc_case(nonmin_phase_example(), {1.0, 1.5}, strict(MultiplierClass::FullZF, 1));
  EXPECT_GE(c.alpha, 0.18);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    LoopRun r = run_loop(c.plant, FieldSpec::scaled_smooth(vec({0.0}), 0.4 + trial, c.sector), test::random_matrix(rng, 3, 1));
    WeightedResidual w = theorem2_residual(r.sig, build_basis(c.cfg), c.h, c.p1, c.p3, c.alpha, 20.0);
    EXPECT_GE(w.relative(), -1e-6);
  }
}

TEST(FilteredIqc, SectorEdgeSignalGivesZero) {
  const SectorBounds s(1.0, 3.0);
  SignalPair sig = linear_signals(1.0, 0.3, s, 1e-2, 10.0);
  ZfBasis z = build_basis(1, -1.0);
  PsiRealization psi = build_psi(z, s, 0.1, 1);
  Matrix zero = Matrix::Zero(1, 1);
  WeightedResidual w = theorem3_residual(sig, psi, build_P(1.0, zero, zero, 1), 0.1, 10.0);
  EXPECT_NEAR(w.value, 0.0, 1e-15);
}

TEST(FilteredIqc, CertifiedWitnessOnLpv) {
  IqcCase c = make_iqc_case(lpv_vehicle_example(), {1.0, 3.0}, strict(MultiplierClass::CausalZF, 2));
  std::mt19937_64 rng(29);
  PsiRealization psi = build_psi(build_basis(c.cfg), c.sector, c.alpha, 1);
  std::uniform_real_distribution<double> uk(1.0, 3.0);
  for (int trial = 0; trial < 3; ++trial) {
    LoopRun r = run_loop(c.plant, FieldSpec::curvature(uk(rng), vec({0.5}), c.sector), test::random_matrix(rng, 2, 1));
    EXPECT_GE(theorem3_residual(r.sig, psi, c.p, c.alpha, 20.0).relative(), -1e-6);
  }
}

TEST(FilteredIqc, UndersizedHIsReportedNegative) {
  // Kernel e^{−t} has unit mass, so H = 0.1 breaks the L1 bound. A slowly
  // varying midpoint signal (p = q) exposes it.
  const SectorBounds s(1.0, 3.0);
  SignalPair sig = linear_signals(2.0, 0.02, s, 1e-2, 20.0);
  ZfBasis z = build_basis(1, -1.0);
  PsiRealization psi = build_psi(z, s, 0.0, 1);
  WeightedResidual bad = theorem3_residual(sig, psi, build_P(0.1, Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1), 0.0, 20.0);
  EXPECT_LT(bad.relative(), -0.1);
  WeightedResidual good = theorem3_residual(sig, psi, build_P(1.0, Matrix::Zero(1, 1), Matrix::Ones(1, 1), 1), 0.0, 20.0);
  EXPECT_GE(good.relative(), -1e-6);
}

TEST(Dissipation, EquilibriumStartIsZero) {
  IqcCase c = make_iqc_case(nonmin_phase_example(), {1.0, 1.0}, strict(MultiplierClass::FullZF, 1));
  LoopRun r = run_loop(c.plant, FieldSpec::curvature(1.0, vec({0.4}), c.sector), Vector::Zero(3), 1e-2, 10.0);
  PsiRealization psi = build_psi(build_basis(c.cfg), c.sector, c.alpha, 1);
  WeightedResidual w = dissipation_residual(psi, c.x, c.p, r.tr, r.sig, r.eta_star, c.alpha, 10.0);
  EXPECT_EQ(w.value, 0.0);
}

TEST(Dissipation, CertifiedWitnessHolds) {
  IqcCase c = make_iqc_case(nonmin_phase_example(), {1.0, 1.0}, strict(MultiplierClass::FullZF, 1));
  EXPECT_GE(c.alpha, 0.25);
  PsiRealization psi = build_psi(build_basis(c.cfg), c.sector, c.alpha, 1);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    LoopRun r = run_loop(c.plant, FieldSpec::curvature(1.0, vec({0.0}), c.sector), test::random_matrix(rng, 3, 1));
    WeightedResidual w = dissipation_residual(psi, c.x, c.p, r.tr, r.sig, r.eta_star, c.alpha, 20.0);
    Vector x0(psi.ss.nx() + 3);
    x0 << Vector::Zero(psi.ss.nx()), r.tr.x.front() - r.eta_star;
    EXPECT_GE(w.value, -1e-5 * x0.dot(c.x * x0));
  }
}

TEST(Dissipation, StaleWitnessAtLargeRateFails) {
  IqcCase c = make_iqc_case(nonmin_phase_example(), {1.0, 1.0}, strict(MultiplierClass::FullZF, 1));
  const double alpha = c.alpha + 0.5;
  PsiRealization psi = build_psi(build_basis(c.cfg), c.sector, alpha, 1);
  LoopRun r = run_loop(c.plant, FieldSpec::curvature(1.0, vec({0.0}), c.sector), vec({1.0, 0.0, 0.0}));
  WeightedResidual w = dissipation_residual(psi, c.x, c.p, r.tr, r.sig, r.eta_star, alpha, 20.0);
  EXPECT_LT(w.value, 0.0);
  EXPECT_THROW(dissipation_residual(psi, Matrix::Identity(2, 2), c.p, r.tr, r.sig, r.eta_star, alpha, 20.0),
               DimensionError);
}

TEST(FilterStates, ExactForLinearInput) {
  // ẋ = −x + w with w(t) = t, x(0) = 0: x(t) = t − 1 + e^{−t}.
  std::vector<Vector> w;
  for (int k = 0; k <= 100; ++k) w.push_back(vec({0.05 * k}));
  auto xs = filter_states(test::mat(1, 1, {-1}), test::mat(1, 1, {1}), w, 0.05, vec({0.0}));
  const double t = 5.0;
  EXPECT_NEAR(xs.back()(0), t - 1.0 + std::exp(-t), 1e-13);
}

TEST(Suite, SmallRunPasses) {
  IqcSuiteOptions opt;
  opt.samples = 10;
  opt.horizon = 10.0;
  IqcSuiteReport rep = run_iqc_suite(default_iqc_cases(), opt);
  ASSERT_EQ(rep.families.size(), 4u);
  EXPECT_EQ(rep.families[0].evaluations, 10 * 41);
  for (const auto& f : rep.families) EXPECT_GE(f.worst_relative, -1e-5) << f.family;
  EXPECT_TRUE(rep.pass());
  EXPECT_THROW(run_iqc_suite({}, opt), InvalidArgument);
}
