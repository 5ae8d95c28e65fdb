#include <gtest/gtest.h>

#include <random>

#include "beltrami/beltrami_core.hpp"
#include "beltrami/ode.hpp"
#include "oracles.hpp"

using namespace beltrami;

namespace {

void expect_vec(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Modes, EvalExamples) {
  expect_vec(eval_mode({1, Parity::E}, 0.0), {0, 1, 0}, 0);
  expect_vec(eval_mode({1, Parity::H}, 0.0), {1, 0, 0}, 0);
  expect_vec(eval_mode({2, Parity::E}, pi / 4), {1, 0, 0}, 1e-15);
}

TEST(Modes, UnitLengthAndDualOrthogonality) {
  for (int m : {-3, -1, 1, 2, 5})
    for (int k = 0; k < 50; ++k) {
      const double z = 0.13 * k;
      const Vec3 e = eval_mode({m, Parity::E}, z), h = eval_mode({m, Parity::H}, z);
      EXPECT_NEAR(norm(e), 1.0, 1e-15);
      EXPECT_NEAR(norm(h), 1.0, 1e-15);
      EXPECT_NEAR(dot(e, h), 0.0, 1e-15);
    }
}

TEST(Modes, AnalyticCurlIsEigen) {
  for (int m : {-2, -1, 1, 3})
    for (Parity p : {Parity::E, Parity::H})
      for (int k = 0; k < 40; ++k) {
        const double z = 0.17 * k;
        expect_vec(mode_curl({m, p}, z), m * eval_mode({m, p}, z), 1e-14);
      }
}

TEST(Modes, CurlResidualWithinTruncationBound) {
  const double h = two_pi / 64;
  for (BeltramiMode mode : {BeltramiMode{1, Parity::E}, BeltramiMode{-1, Parity::H}, BeltramiMode{3, Parity::E}}) {
    const double m = std::abs(mode.m);
    const double res = curl_residual(mode, 64);
    EXPECT_LT(res, m * m * m * h * h / 6 + 1e-12);
    EXPECT_GT(res, 0.5 * m * m * m * h * h / 6);  // the bound is nearly attained
  }
}

TEST(Modes, CurlResidualRejectsCoarseGrid) {
  try {
    curl_residual({1, Parity::E}, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_resolution);
  }
}

TEST(Modes, CrossProductsMatchComponentwise) {
  for (int m = -2; m <= 2; ++m)
    for (int n = -2; n <= 2; ++n)
      for (Parity p : {Parity::E, Parity::H})
        for (Parity q : {Parity::E, Parity::H})
          for (int k = 0; k < 64; ++k) {
            const double z = two_pi * k / 64;
            const Vec3 direct = cross(eval_mode({m, p}, z), eval_mode({n, q}, z));
            expect_vec(mode_cross({m, p}, {n, q}, z), direct, 1e-14);
            expect_vec(mode_cross({m, p}, {n, q}, z), -mode_cross({n, q}, {m, p}, z), 1e-15);
          }
}

TEST(Modes, PrintedExamples) {
  // e1 x h1 evaluates to -z_hat by direct evaluation of the modes.
  expect_vec(mode_cross({1, Parity::E}, {1, Parity::H}, 0.3), {0, 0, -1}, 0);
  expect_vec(mode_cross({1, Parity::E}, {1, Parity::E}, 0.3), {0, 0, 0}, 0);
  expect_vec(mode_cross({2, Parity::E}, {1, Parity::E}, pi / 2), {0, 0, 1}, 1e-15);
}

TEST(Modes, BasisClosure) {
  const TripletBasis all[] = {TripletBasis::E, TripletBasis::H, TripletBasis::Z};
  for (int k = 0; k < 256; ++k) {
    const double z = two_pi * k / 256;
    for (auto a : all)
      for (auto b : all)
        expect_vec(basis_cross(a, b, 1, z), cross(eval_basis(a, 1, z), eval_basis(b, 1, z)), 1e-15);
  }
}

TEST(Triplet, DecoupledDecay) {
  TripletState s{1.0, 0.0, 0.0, 1.0, 100.0, 0.0};
  const auto out = triplet_evolve(s, [](double) { return 0.0; }, 5.0, 1e-12);
  EXPECT_NEAR(out.gamma0, std::exp(-0.05), 1e-14);
  EXPECT_NEAR(out.gamma1, 0.0, 1e-15);
}

TEST(Triplet, MatchesOdeOracle) {
  TripletState s{0.7, -0.2, 0.3, 1.0, 100.0, 0.0};
  const auto out = triplet_evolve(s, [](double) { return 0.3; }, 1.0, 1e-12);
  const double R = 100.0;
  auto f = [R](double, const oracle::State<2>& y) {
    return oracle::State<2>{0.3 * y[1] - y[0] / R, -0.3 * y[0] - y[1] / R};
  };
  const auto ref = oracle::rk4<2>(f, 0.0, {0.7, -0.2}, 1.0, 2000);
  EXPECT_NEAR(out.gamma0, ref[0], 1e-8);
  EXPECT_NEAR(out.gamma1, ref[1], 1e-8);
}

TEST(Triplet, TimeDependentDeltaMatchesOracle) {
  TripletState s{0.4, 0.9, 0.0, 1.0, 50.0, 0.5};
  auto delta = [](double t) { return std::sin(3 * t) + 0.2 * t; };
  const auto out = triplet_evolve(s, delta, 4.0, 1e-12);
  auto f = [&](double t, const oracle::State<2>& y) {
    return oracle::State<2>{delta(t) * y[1] - y[0] / 50.0, -delta(t) * y[0] - y[1] / 50.0};
  };
  const auto ref = oracle::rk4<2>(f, 0.5, {0.4, 0.9}, 4.0, 4000);
  EXPECT_NEAR(out.gamma0, ref[0], 1e-9);
  EXPECT_NEAR(out.gamma1, ref[1], 1e-9);
  EXPECT_NEAR(out.delta, delta(4.0), 0);
}

TEST(Triplet, EnergyIdentityRandomDraws) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int k = 0; k < 100; ++k) {
    const double g0 = U(rng), g1 = U(rng), R = 10 + 990 * (U(rng) + 1) / 2;
    const double a = U(rng), b = 3 * U(rng), c = U(rng);
    TripletState s{g0, g1, 0.0, 1.0, R, 0.0};
    const auto out = triplet_evolve(s, [=](double t) { return a + c * std::cos(b * t); }, 7.0, 1e-10);
    const double lhs = out.gamma0 * out.gamma0 + out.gamma1 * out.gamma1;
    const double rhs = (g0 * g0 + g1 * g1) * std::exp(-14.0 / R);
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Triplet, Errors) {
  TripletState s;
  EXPECT_THROW(triplet_evolve(s, [](double) { return 0.0; }, -1.0, 1e-8), Error);
  EXPECT_THROW(triplet_evolve(s, [](double) { return 0.0; }, 1.0, 0.0), Error);
  try {
    triplet_evolve(s, [](double t) { return t > 0.5 ? NAN : 0.0; }, 1.0, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::integration);
  }
}

TEST(Triplet, Velocity) {
  TripletState s{1.0, 0.0, 0.0, 1.0, 100.0, 0.0};
  expect_vec(triplet_velocity(s, 0.0), {0, 1, 0}, 1e-15);
  TripletState t{0.3, 0.5, 0.2, 1.0, 100.0, 0.0};
  const Vec3 v = triplet_velocity(t, -t.phase());
  EXPECT_NEAR(v.x, 0.0, 1e-15);
  EXPECT_NEAR(v.y, t.amplitude(), 1e-15);
  EXPECT_EQ(v.z, 0.2);
}

TEST(Triplet, VelocityIsCurlEigenfield) {
  // u = C(sin(z+phi), cos(z+phi), 0) + delta z_hat; the planar part is an e_1 mode shifted in z
  TripletState t{0.3, 0.5, 0.0, 1.0, 100.0, 0.0};
  const double C = t.amplitude(), phi = t.phase();
  for (int k = 0; k < 32; ++k) {
    const double z = 0.2 * k;
    expect_vec(triplet_velocity(t, z), C * eval_mode({1, Parity::E}, z + phi), 1e-15);
  }
}

TEST(Ode, DopriAgainstExactSolution) {
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  auto f = [](double, const OdeState<2>& y) { return OdeState<2>{y[1], -y[0]}; };
  const auto r = integrate_dopri45<2>(f, 0.0, {1.0, 0.0}, 10.0, opt, [](double, const auto&) { return true; });
  EXPECT_EQ(r.status, OdeStatus::reached_end);
  EXPECT_NEAR(r.y[0], std::cos(10.0), 1e-8);
  EXPECT_NEAR(r.y[1], -std::sin(10.0), 1e-8);
}
