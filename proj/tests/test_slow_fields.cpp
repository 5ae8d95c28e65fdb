#include <gtest/gtest.h>

#include <random>

#include "beltrami/energy_density.hpp"
#include "oracles.hpp"

using namespace beltrami;

namespace {

TrigPoly2D random_poly(std::mt19937_64& rng, int deg, double scale) {
  std::uniform_real_distribution<double> U(-1, 1);
  TrigPoly2D p;
  for (int m = 0; m <= deg; ++m)
    for (int n = -deg; n <= deg; ++n) {
      if (m == 0 && n <= 0) continue;
      p.add_cos(m, n, scale * U(rng)).add_sin(m, n, scale * U(rng));
    }
  return p;
}

}  // namespace

TEST(TrigPoly, SinProductValues) {
  const auto p = TrigPoly2D::sin_product(2.5);
  EXPECT_NEAR(poly_eval(p, pi / 2, pi / 2), 2.5, 1e-15);
  EXPECT_NEAR(poly_eval(p, pi, pi), 0.0, 1e-15);
  const Vec2 g = poly_grad(p, pi, pi);
  EXPECT_NEAR(g.x, 0.0, 1e-15);
  EXPECT_NEAR(g.y, 0.0, 1e-15);
  const Vec2 g2 = poly_grad(p, pi / 2, pi);
  auto f = [&](double x, double y) { return p.eval(x, y); };
  const auto fd = oracle::fd_grad(f, pi / 2, pi);
  EXPECT_NEAR(g2.x, fd[0], 1e-9);
  EXPECT_NEAR(g2.y, fd[1], 1e-9);
  EXPECT_NEAR(g2.y, -2.5, 1e-14);
}

TEST(TrigPoly, ArnoldAndConstant) {
  EXPECT_NEAR(TrigPoly2D::arnold(1, 0, 0, 0, 0, 0).eval(0.0, 1.3), 1.0, 1e-15);
  const auto c = TrigPoly2D::constant(3.0);
  EXPECT_EQ(c.eval(1, 2), 3.0);
  EXPECT_EQ(c.grad(1, 2).x, 0.0);
  EXPECT_EQ(c.grad(1, 2).y, 0.0);
  EXPECT_TRUE(c.is_constant());
}

TEST(TrigPoly, HermitianAndSymmetrize) {
  std::mt19937_64 rng(3);
  const auto p = random_poly(rng, 3, 0.2);
  EXPECT_LT(p.hermitian_defect(), 1e-15);
  TrigPoly2D q;
  q.add_term(1, 2, {0.3, 0.1});
  EXPECT_GT(q.hermitian_defect(), 0.1);
  const auto s = q.symmetrized();
  EXPECT_LT(s.hermitian_defect(), 1e-15);
  EXPECT_EQ(s.coeff(-1, -2), std::conj(s.coeff(1, 2)));
}

TEST(TrigPoly, PeriodicAndDerivativesAgreeWithFd) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, two_pi);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_poly(rng, 1 + trial % 3, 0.3);
    auto f = [&](double x, double y) { return p.eval(x, y); };
    for (int k = 0; k < 10; ++k) {
      const double x = U(rng), y = U(rng);
      EXPECT_NEAR(p.eval(x, y), p.eval(x + two_pi, y), 1e-12);
      EXPECT_NEAR(p.eval(x, y), p.eval(x, y - two_pi), 1e-12);
      const auto g = p.grad(x, y);
      const auto fd = oracle::fd_grad(f, x, y);
      EXPECT_NEAR(g.x, fd[0], 1e-8);
      EXPECT_NEAR(g.y, fd[1], 1e-8);
      const auto H = p.hessian(x, y);
      const auto fh = oracle::fd_hessian(f, x, y);
      EXPECT_NEAR(H.a, fh[0], 1e-5);
      EXPECT_NEAR(H.b, fh[1], 1e-5);
      EXPECT_NEAR(H.c, fh[2], 1e-5);
    }
  }
}

TEST(TrigPoly, ProductIsExact) {
  std::mt19937_64 rng(5);
  const auto p = random_poly(rng, 2, 0.4), q = random_poly(rng, 1, 0.4);
  const auto pq = p * q;
  EXPECT_LT(pq.hermitian_defect(), 1e-15);
  EXPECT_EQ(pq.degree(), 3);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(pq.eval(0.3 * k, 1.1 * k), p.eval(0.3 * k, 1.1 * k) * q.eval(0.3 * k, 1.1 * k), 1e-13);
}

TEST(EnergyDensity, BasicValues) {
  EnergyDensity flat(1.5, 1.0, {}, {});
  EXPECT_EQ(c0_eval(flat, 0.3, 0.4), 1.5);
  EXPECT_EQ(c0_grad(flat, 0.3, 0.4).x, 0.0);
  const auto H = c0_hessian(flat, 0.3, 0.4);
  EXPECT_EQ(H.a, 0.0);
  EXPECT_EQ(H.b, 0.0);
  EXPECT_EQ(H.c, 0.0);

  const double eb = 0.2;
  EnergyDensity E(1.0, 1.0, TrigPoly2D::sin_product(eb), {});
  EXPECT_NEAR(c0_eval(E, pi / 2, pi / 2), 1.0 + eb, 1e-15);
  const Vec2 g = c0_grad(E, pi / 2, pi / 2);
  EXPECT_NEAR(norm(g), 0.0, 1e-15);
  const auto Hm = c0_hessian(E, pi / 2, pi / 2);
  EXPECT_NEAR(Hm.a, -eb, 1e-14);
  EXPECT_NEAR(Hm.c, -eb, 1e-14);
  EXPECT_NEAR(Hm.b, 0.0, 1e-14);
  const auto Hs = c0_hessian(E, pi, pi);
  EXPECT_NEAR(Hs.a, 0.0, 1e-14);
  EXPECT_NEAR(Hs.c, 0.0, 1e-14);
  EXPECT_NEAR(Hs.b, eb, 1e-14);
  EXPECT_NEAR(Hs.det(), -eb * eb, 1e-14);
  // second-difference oracle
  auto f = [&](double x, double y) { return E.eval(x, y); };
  const auto fh = oracle::fd_hessian(f, pi, pi);
  EXPECT_NEAR(Hs.b, fh[1], 1e-6);
}

TEST(EnergyDensity, SmallAmplitudeExpansion) {
  for (double eb : {0.02, 0.01}) {
    EnergyDensity E(1.0, 1.0, TrigPoly2D::sin_product(eb), TrigPoly2D().add_cos(1, 0, eb));
    double worst = 0.0;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        const double x = two_pi * i / 32, y = two_pi * j / 32;
        const double approx = std::sqrt(1.0 + 2 * E.gamma0().eval(x, y));
        worst = std::max(worst, std::abs(E.eval(x, y) - approx));
      }
    EXPECT_LT(worst, 1.0 * eb * eb);
  }
}

TEST(EnergyDensity, DerivativesAgreeWithFdRandom) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0, two_pi);
  for (int trial = 0; trial < 10; ++trial) {
    EnergyDensity E(1.0, 1.0, random_poly(rng, 2, 0.02), random_poly(rng, 2, 0.02));
    ASSERT_TRUE(E.positivity_guaranteed());
    auto f = [&](double x, double y) { return E.eval(x, y); };
    for (int k = 0; k < 10; ++k) {
      const double x = U(rng), y = U(rng);
      const auto g = c0_grad(E, x, y);
      const auto fd = oracle::fd_grad(f, x, y);
      EXPECT_NEAR(g.x, fd[0], 1e-6);
      EXPECT_NEAR(g.y, fd[1], 1e-6);
      const auto H = c0_hessian(E, x, y);
      const auto gx = oracle::fd_grad([&](double a, double b) { return E.grad(a, b).x; }, x, y);
      const auto gy = oracle::fd_grad([&](double a, double b) { return E.grad(a, b).y; }, x, y);
      EXPECT_NEAR(H.a, gx[0], 1e-7);
      EXPECT_NEAR(H.b, gx[1], 1e-7);
      EXPECT_NEAR(H.b, gy[0], 1e-7);
      EXPECT_NEAR(H.c, gy[1], 1e-7);
    }
  }
}

TEST(EnergyDensity, SquaredPolyIsExact) {
  std::mt19937_64 rng(23);
  EnergyDensity E(1.2, 0.9, random_poly(rng, 2, 0.05), random_poly(rng, 1, 0.05));
  const auto sq = E.squared_poly();
  for (int k = 0; k < 30; ++k) {
    const double x = 0.21 * k, y = 0.37 * k;
    EXPECT_NEAR(sq.eval(x, y), E.eval(x, y) * E.eval(x, y), 1e-13);
  }
}

TEST(EnergyDensity, PositivityFlag) {
  EnergyDensity ok(1.0, 1.0, TrigPoly2D::sin_product(0.5), {});
  EXPECT_TRUE(ok.positivity_guaranteed());
  EnergyDensity risky(1.0, 1.0, TrigPoly2D::sin_product(2.5), {});
  EXPECT_FALSE(risky.positivity_guaranteed());
}
