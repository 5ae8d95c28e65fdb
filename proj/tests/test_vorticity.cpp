#include <gtest/gtest.h>

#include <random>

#include "beltrami/vorticity.hpp"
#include "oracles.hpp"

using namespace beltrami;

namespace {

EnergyDensity sin_product_field(double A = 1.0) { return {A, 1.0, TrigPoly2D::sin_product(0.2), {}}; }

EnergyDensity generic_field() {
  return {1.0, 1.0, TrigPoly2D::sin_product(0.2).add_cos(1, 2, 0.03),
          TrigPoly2D().add_sin(0, 1, 0.05).add_cos(2, 1, 0.02)};
}

AsymptoticVelocity make_velocity(const EnergyDensity& E, double R, PhaseJetField phase = {}) {
  AsymptoticVelocity V{E, std::move(phase), {}, {}, ScalingFrame::from_reynolds(R)};
  return V;
}

CriticalPoint saddle_of(const std::vector<CriticalPoint>& pts, double x, double y) {
  const int id = nearest_point(pts, {x, y}, 1e-8);
  EXPECT_GE(id, 0);
  return pts[id];
}

}  // namespace

TEST(AsymptoticVelocity, ReducesToGradientLineField) {
  const auto E = generic_field();
  const auto V = make_velocity(E, 1e4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, two_pi);
  for (int k = 0; k < 100; ++k) {
    const double x = U(rng), y = U(rng);
    const Vec3 u = eval_asymptotic_velocity(V, x, y, 0.0, 0.0);
    const Vec2 g = E.grad(x, y);
    EXPECT_NEAR(std::hypot(u.x, u.y), E.eval(x, y), 1e-14);
    EXPECT_NEAR(cross(Vec2{u.x, u.y}, g), 0.0, 1e-14);
    EXPECT_EQ(u.z, 0.0);
    EXPECT_NEAR(dot(g, Vec2{g.y, -g.x}), 0.0, 1e-17);
  }
}

TEST(AsymptoticVelocity, CorrectionTermHasAmplitudeCTilde) {
  auto V = make_velocity(generic_field(), 1e4);
  V.C_tilde = [](double x, double) { return 0.3 + 0.1 * std::sin(x); };
  V.phi_offset = TrigPoly2D::constant(0.4);
  auto base = make_velocity(generic_field(), 1e4);
  for (double x : {0.3, 2.0, 4.4}) {
    const Vec3 a = eval_asymptotic_velocity(V, x, 1.1, 0.0, 0.0), b = eval_asymptotic_velocity(base, x, 1.1, 0.0, 0.0);
    const Vec2 w{(a.x - b.x) / V.frame.eps, (a.y - b.y) / V.frame.eps};
    EXPECT_NEAR(norm(w), 0.3 + 0.1 * std::sin(x), 1e-10);
    // angle phi~0 from the gradient direction
    const Vec2 g = V.E.grad(x, 1.1);
    EXPECT_NEAR(dot(w, g) / (norm(w) * norm(g)), std::cos(0.4), 1e-10);
  }
  EXPECT_THROW(eval_asymptotic_velocity(make_velocity(sin_product_field(), 1e4), pi, pi, 0.0, 0.0), Error);
}

TEST(AsymptoticVelocity, VerticalGradientMatchesFiniteDifferences) {
  const auto E = generic_field();
  const ModePhase mp{0.05, 1, 2, 0.3, 1.0};
  const auto V = make_velocity(E, 1e4, mp.field());
  const auto hist = phase_cauchy_history(E, initial_phase(E, 3), {}, 0.5, 8, 0.002, PhaseRunOptions{1e100, 5});
  const auto W = make_velocity(E, 1e4, hist.jet_field());
  for (const auto* v : {&V, &W})
    for (double x : {0.4, 2.5})
      for (double y : {1.0, 5.0}) {
        const double tau = 0.37;
        const auto f = [&](double a, double b) { return quasi_stationary_vertical(*v, a, b, tau); };
        const auto fd = oracle::fd_grad(f, x, y);
        const Vec2 an = quasi_stationary_vertical_grad(*v, x, y, tau);
        EXPECT_NEAR(an.x, fd[0], 1e-7);
        EXPECT_NEAR(an.y, fd[1], 1e-7);
      }
}

TEST(Vorticity, AnalyticCurlMatchesCirculation) {
  const auto E = generic_field();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, two_pi);
  int checked = 0;
  while (checked < 30) {
    const double x = U(rng), y = U(rng);
    if (norm(E.grad(x, y)) < 0.02) continue;
    const auto field = [&](double a, double b) {
      const Jet2 c = E.jet(a, b);
      const Vec2 u = c.value / norm(c.grad) * c.grad;
      return std::array<double, 2>{u.x, u.y};
    };
    const double circ = oracle::circulation_curl(field, x, y, 1e-3, 256);
    const double an = gradient_field_vorticity(E, x, y);
    EXPECT_NEAR(circ, an, 1e-4 * (1 + std::abs(an))) << x << "," << y;
    ++checked;
  }
}

TEST(Vorticity, SaddleSlopeIsMinusOne) {
  const auto E = sin_product_field();
  const auto pts = find_critical_points(E, 16, 1e-13);
  const auto s = saddle_of(pts, pi, pi);
  const auto fit = vertical_singularity_fit(E, s, pts);
  EXPECT_NEAR(fit.slope, -1.0, 0.05);
  for (std::size_t k = 1; k < fit.radii.size(); ++k) EXPECT_LT(fit.radii[k], fit.radii[k - 1]);
  // innermost ring follows the leading eigen-frame profile
  for (std::size_t k = 0; k < fit.angles.size(); ++k)
    EXPECT_NEAR(fit.angle_profile[k], singular_profile(E.eval(s.xi, s.eta), s.eig.l1, s.eig.l2, fit.angles[k]),
                1e-3 * std::abs(fit.prefactor) + 1e-9);
  // doubling A doubles C0 at the point and leaves the Hessian unchanged
  const auto E2 = sin_product_field(2.0);
  const auto pts2 = find_critical_points(E2, 16, 1e-13);
  const auto fit2 = vertical_singularity_fit(E2, saddle_of(pts2, pi, pi), pts2);
  EXPECT_NEAR(fit2.prefactor / fit.prefactor, 2.0, 0.1);
}

TEST(Vorticity, EveryAnisotropicPointOfArnoldField) {
  const EnergyDensity E(1.0, 1.0, 0.1 * TrigPoly2D::arnold(1.0, 0.13, 0.92, -0.07, 1.05, 0.11), {});
  const auto pts = find_critical_points(E, 16, 1e-13);
  for (const auto& p : pts) {
    const auto fit = vertical_singularity_fit(E, p, pts);
    ASSERT_FALSE(fit.isotropic);
    EXPECT_NEAR(fit.slope, -1.0, 0.05) << p.xi << "," << p.eta;
  }
}

TEST(Vorticity, UmbilicAndGeometry) {
  const EnergyDensity E(1.0, 1.0, TrigPoly2D().add_cos(1, 0, 0.1).add_cos(0, 1, 0.1), {});
  const auto pts = find_critical_points(E, 16, 1e-13);
  const int id = nearest_point(pts, {0.0, 0.0}, 1e-8);
  ASSERT_GE(id, 0);
  const auto fit = vertical_singularity_fit(E, pts[id], pts);
  EXPECT_TRUE(fit.isotropic);
  // no 1/r term: the ring amplitude shrinks toward the point
  for (std::size_t k = 1; k < fit.amplitudes.size(); ++k) EXPECT_LT(fit.amplitudes[k], fit.amplitudes[k - 1]);
  EXPECT_LT(fit.amplitudes.back() * fit.radii.back(), 1e-6);
  try {
    vertical_singularity_fit(E, pts[id], pts, 1e-3, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::geometry);
  }
}

TEST(Vorticity, PlaneComponentGrowth) {
  const auto E = sin_product_field();
  const auto pts = find_critical_points(E, 16, 1e-13);
  const auto s = saddle_of(pts, pi, pi);
  const ModePhase mp{1e-3, 1, 1, 0.2, E.eval(s.xi, s.eta)};
  const auto V = make_velocity(E, 1e4, mp.field());
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(4.0 + 0.3 * k);
  const auto rep = plane_component_growth(V, s, pts, times, 0.01, mp.rate());
  EXPECT_LT(rep.rate_error, 0.02);
  EXPECT_NEAR(rep.half_radius_ratio, 2.0, 0.2);
  const auto Z = make_velocity(E, 1e4);
  const auto zero = plane_component_growth(Z, s, pts, times, 0.01, mp.rate());
  for (double a : zero.amplitudes) EXPECT_EQ(a, 0.0);
}

TEST(Collinearity, PureBeltramiHasNoDefect) {
  const EnergyDensity E(1.2, 1.0, {}, {});
  const auto rep = collinearity_defect(make_velocity(E, 1e6), 0.0, 4, 16);
  EXPECT_LT(rep.defect_l2, 1e-12);
}

TEST(Collinearity, DefectTracksEpsDelta1) {
  const auto E = generic_field();
  const ModePhase mp{1.0, 1, 1, 0.2, 1.0};
  const auto a = collinearity_defect(make_velocity(E, 1e4, mp.field()), 1.0, 8, 16);
  const auto b = collinearity_defect(make_velocity(E, 4e4, mp.field()), 1.0, 8, 16);
  EXPECT_LT(a.relative_mismatch, 0.1);
  EXPECT_NEAR(a.defect_l2 / b.defect_l2, 2.0, 0.2);
  EXPECT_THROW(collinearity_defect(make_velocity(E, 1e4), 0.0, 4, 8), Error);
}
