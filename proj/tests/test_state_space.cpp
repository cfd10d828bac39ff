#include <random>

#include "test_util.hpp"

using namespace zfcert;
using zfcert::test::mat;
using zfcert::test::max_abs_diff;

TEST(Series, IdentityFrontLeavesSystemUnchanged) {
  std::mt19937_64 rng(1);
  StateSpace s = test::random_ss(rng, 3, 2, 2);
  StateSpace out = series(StateSpace::static_gain(Matrix::Identity(2, 2)), s);
  EXPECT_EQ(max_abs_diff(out.a, s.a), 0.0);
  EXPECT_EQ(max_abs_diff(out.b, s.b), 0.0);
  EXPECT_EQ(max_abs_diff(out.c, s.c), 0.0);
  EXPECT_EQ(max_abs_diff(out.d, s.d), 0.0);
}

TEST(Series, StaticGainsMultiply) {
  Matrix d1 = mat(1, 2, {2, 3}), d2 = mat(2, 1, {5, 7});
  StateSpace out = series(StateSpace::static_gain(d1), StateSpace::static_gain(d2));
  EXPECT_EQ(out.nx(), 0);
  EXPECT_DOUBLE_EQ(out.d(0, 0), 31.0);
}

TEST(Series, FirstOrderBlocks) {
  StateSpace front(mat(1, 1, {-1}), mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {0}));
  StateSpace back(mat(1, 1, {-2}), mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {1}));
  StateSpace s = series(front, back);
  EXPECT_EQ(max_abs_diff(s.a, mat(2, 2, {-1, 1, 0, -2})), 0.0);
  EXPECT_EQ(max_abs_diff(s.b, mat(2, 1, {1, 1})), 0.0);
  EXPECT_EQ(max_abs_diff(s.c, mat(1, 2, {1, 0})), 0.0);
  EXPECT_EQ(max_abs_diff(s.d, mat(1, 1, {0})), 0.0);
}

TEST(Series, WidthMismatchThrows) {
  std::mt19937_64 rng(2);
  EXPECT_THROW(series(test::random_ss(rng, 2, 2, 1), test::random_ss(rng, 2, 1, 3)), DimensionError);
}

TEST(Series, IsAssociative) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    StateSpace a = test::random_ss(rng, 2, 2, 1), b = test::random_ss(rng, 3, 3, 2), c = test::random_ss(rng, 1, 1, 3);
    StateSpace l = series(series(a, b), c), r = series(a, series(b, c));
    EXPECT_LT(max_abs_diff(l.a, r.a), 1e-12);
    EXPECT_LT(max_abs_diff(l.b, r.b), 1e-12);
    EXPECT_LT(max_abs_diff(l.c, r.c), 1e-12);
    EXPECT_LT(max_abs_diff(l.d, r.d), 1e-12);
  }
}

TEST(Series, TransferIsProduct) {
  std::mt19937_64 rng(4);
  StateSpace f = test::random_ss(rng, 3, 2, 2), b = test::random_ss(rng, 2, 1, 2);
  for (double w : {0.3, 1.0, 7.0}) {
    std::complex<double> s(0.1, w);
    auto lhs = test::transfer(series(f, b), s);
    test::CMatrix rhs = test::transfer(f, s) * test::transfer(b, s);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(StackAndAppend, Shapes) {
  std::mt19937_64 rng(5);
  StateSpace a = test::random_ss(rng, 2, 1, 1), b = test::random_ss(rng, 3, 1, 2);
  StateSpace st = stack_outputs(a, b);
  EXPECT_EQ(st.nx(), 5);
  EXPECT_EQ(st.nu(), 1);
  EXPECT_EQ(st.ny(), 3);
  StateSpace ap = append(a, b);
  EXPECT_EQ(ap.nu(), 2);
  EXPECT_EQ(ap.ny(), 3);
  std::complex<double> s(0.2, 0.9);
  auto t = test::transfer(st, s);
  EXPECT_LT(std::abs(t(0, 0) - test::transfer(a, s)(0, 0)), 1e-12);
  EXPECT_LT((t.bottomRows(2) - test::transfer(b, s)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KronLift, Examples) {
  EXPECT_EQ(max_abs_diff(kron_lift(mat(1, 1, {2}), 2), mat(2, 2, {2, 0, 0, 2})), 0.0);
  EXPECT_EQ(max_abs_diff(kron_lift(Matrix::Identity(2, 2), 3), Matrix::Identity(6, 6)), 0.0);
  Matrix j = kron_lift(mat(2, 2, {0, 1, -1, 0}), 2);
  EXPECT_EQ(max_abs_diff(j, mat(4, 4, {0, 0, 1, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, -1, 0, 0})), 0.0);
  EXPECT_THROW(kron_lift(Matrix::Identity(2, 2), 0), InvalidArgument);
}

TEST(KronLift, DistributesOverProducts) {
  std::mt19937_64 rng(6);
  for (int d : {1, 2, 3}) {
    Matrix a = test::random_matrix(rng, 3, 4), b = test::random_matrix(rng, 4, 2);
    EXPECT_LT(max_abs_diff(kron_lift(Matrix(a * b), d), kron_lift(a, d) * kron_lift(b, d)), 1e-12);
  }
}

TEST(VehicleG, PassThroughTracker) {
  StateSpace tracker = StateSpace::static_gain(mat(1, 2, {1, 0}));
  StateSpace g = build_vehicle_G(tracker, {1.0, 2.0}, 1);
  EXPECT_EQ(max_abs_diff(g.a, mat(2, 2, {0, 1, 0, -2})), 0.0);
  EXPECT_EQ(max_abs_diff(g.b, mat(2, 1, {0, -1})), 0.0);
  EXPECT_EQ(max_abs_diff(g.c, mat(1, 2, {1, 0})), 0.0);
  StateSpace g0 = build_vehicle_G(tracker, {1.0, 0.0}, 1);
  EXPECT_EQ(max_abs_diff(g0.a, mat(2, 2, {0, 1, 0, 0})), 0.0);
}

TEST(VehicleG, WidthMismatchThrows) {
  EXPECT_THROW(build_vehicle_G(StateSpace::static_gain(mat(1, 1, {1})), {1.0, 2.0}, 1), DimensionError);
  EXPECT_THROW(reference_block({0.0, 1.0}), InvalidArgument);
}

TEST(VehicleG, LiftedHasIntegralAction) {
  StateSpace tracker = StateSpace::static_gain(kron_lift(mat(1, 2, {1, 0}), 2));
  StateSpace g = build_vehicle_G(tracker, {1.0, 2.0}, 2);
  EXPECT_EQ(g.nx(), 4);
  EXPECT_TRUE(has_integral_action(g));
}

namespace {
std::vector<std::complex<double>> sorted(Eigen::VectorXcd v) {
  std::vector<std::complex<double>> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}
}  // namespace

TEST(Eigenvalues, Examples) {
  auto ev = sorted(eigenvalues(mat(2, 2, {0, 1, -1, -0.8})));
  EXPECT_NEAR(ev[0].real(), -0.4, 1e-12);
  EXPECT_NEAR(std::abs(ev[0].imag()), std::sqrt(1 - 0.16), 1e-12);
  EXPECT_NEAR(ev[0].imag(), -ev[1].imag(), 1e-12);
  for (auto e : sorted(eigenvalues(Matrix::Identity(3, 3)))) EXPECT_NEAR(std::abs(e - 1.0), 0.0, 1e-14);
  for (auto e : sorted(eigenvalues(mat(2, 2, {0, 1, 0, 0})))) EXPECT_EQ(std::abs(e), 0.0);
  EXPECT_THROW(eigenvalues(Matrix::Zero(2, 3)), DimensionError);
}

TEST(Eigenvalues, MatchCompanionRoots) {
  // (s+1)(s+2)(s−3)(s²+2s+5)
  std::vector<std::complex<double>> roots{-1, -2, 3, {-1, 2}, {-1, -2}};
  std::vector<std::complex<double>> poly{1};
  for (auto r : roots) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (size_t k = 0; k < poly.size(); ++k) {
      next[k] += poly[k];
      next[k + 1] -= r * poly[k];
    }
    poly = next;
  }
  const int n = static_cast<int>(roots.size());
  Matrix comp = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) comp(0, k) = -poly[k + 1].real();
  for (int k = 1; k < n; ++k) comp(k, k - 1) = 1.0;
  auto ev = eigenvalues(comp);
  ASSERT_EQ(ev.size(), n);
  std::vector<bool> used(n, false);
  for (auto r : roots) {
    int best = -1;
    for (int k = 0; k < n; ++k)
      if (!used[k] && (best < 0 || std::abs(ev(k) - r) < std::abs(ev(best) - r))) best = k;
    used[best] = true;
    EXPECT_LT(std::abs(ev(best) - r), 1e-9);
  }
}

TEST(SpectralAbscissa, Examples) {
  EXPECT_DOUBLE_EQ(spectral_abscissa(mat(2, 2, {-1, 0, 0, -3})), -1.0);
  EXPECT_NEAR(spectral_abscissa(mat(2, 2, {0, 1, -1, -0.8})), -0.4, 1e-12);
  EXPECT_NEAR(spectral_abscissa(mat(2, 2, {0, 1, -1, -2})), -1.0, 1e-7);
}

TEST(SpectralAbscissa, InvariantUnderSimilarity) {
  std::mt19937_64 rng(7);
  Matrix a = test::random_matrix(rng, 5, 5);
  Matrix t = test::random_matrix(rng, 5, 5) + 5.0 * Matrix::Identity(5, 5);
  EXPECT_NEAR(spectral_abscissa(a), spectral_abscissa(t * a * t.inverse()), 1e-9);
}

TEST(NullDirection, Examples) {
  Vector v = null_direction(mat(2, 2, {0, 1, 0, -2}));
  ASSERT_EQ(v.size(), 2);
  EXPECT_NEAR(std::abs(v(0)), 1.0, 1e-12);
  EXPECT_NEAR(v(1), 0.0, 1e-12);
  EXPECT_EQ(null_direction(Matrix::Identity(2, 2)).size(), 0);
  Vector z = null_direction(Matrix::Zero(2, 2));
  ASSERT_EQ(z.size(), 2);
  EXPECT_NEAR(z.norm(), 1.0, 1e-12);
}

TEST(NullDirection, RandomRankDeficient) {
  std::mt19937_64 rng(8);
  Matrix a = test::random_matrix(rng, 4, 3) * test::random_matrix(rng, 3, 4);
  Vector v = null_direction(a);
  ASSERT_EQ(v.size(), 4);
  EXPECT_LT((a * v).norm(), 1e-10 * a.norm());
}

TEST(StateSpace, ConstructorChecksShapes) {
  EXPECT_THROW(StateSpace(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
               DimensionError);
  EXPECT_THROW(StateSpace(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
               DimensionError);
  EXPECT_THROW(StateSpace(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 2)),
               DimensionError);
}
