#pragma once

// Asymptotic velocity near the quasi-stationary streamline surfaces, the near-collinearity of
// velocity and vorticity, and the vorticity singularities at stationary points of C0.
//
// Slow-variable conventions: the planar part of the gradient-line field is u = C0 g/|g| with
// g = grad C0, so its z-vorticity is
//     omega_z = C0 (g x Hg) / |g|^3,
// which near a nondegenerate stationary point with Hessian eigenvalues l1, l2 behaves as
//     C0 l1 l2 (l2 - l1) cos(a) sin(a) / (r (l1^2 cos^2 a + l2^2 sin^2 a)^{3/2})
// in the eigen-frame (a measured from the first eigenvector).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "beltrami/energy_density.hpp"
#include "beltrami/error.hpp"
#include "beltrami/fft.hpp"
#include "beltrami/morse.hpp"
#include "beltrami/phase.hpp"

namespace beltrami {

struct AsymptoticVelocity {
  EnergyDensity E;
  PhaseJetField phase;
  /// first correction amplitude at the evaluation time; empty means zero
  std::function<double(double, double)> C_tilde;
  TrigPoly2D phi_offset;
  ScalingFrame frame;
  double grad_floor = 1e-8;

  double correction(double xi, double eta) const { return C_tilde ? C_tilde(xi, eta) : 0.0; }
  PhaseJet phase_at(double xi, double eta, double tau) const { return phase ? phase(xi, eta, tau) : PhaseJet{}; }
};

/// Vertical velocity on the quasi-stationary surface: -C0 (g^ . grad phi) - phi_tau.
inline double quasi_stationary_vertical(const AsymptoticVelocity& V, double xi, double eta, double tau) {
  const Jet2 c = V.E.jet(xi, eta);
  const double gn = norm(c.grad);
  if (gn <= V.grad_floor) throw Error(ErrorKind::near_critical_point, "gradient below the floor");
  const PhaseJet p = V.phase_at(xi, eta, tau);
  return -c.value * dot(c.grad, p.grad) / gn - p.dtau;
}

/// Slow gradient of the quasi-stationary vertical velocity:
///   -grad C0 (g^ . grad phi) - C0 [H (I - g^ g^T) grad phi / |g| + Hphi g^] - grad phi_tau
inline Vec2 quasi_stationary_vertical_grad(const AsymptoticVelocity& V, double xi, double eta, double tau) {
  const Jet2 c = V.E.jet(xi, eta);
  const double gn = norm(c.grad);
  if (gn <= V.grad_floor) throw Error(ErrorKind::near_critical_point, "gradient below the floor");
  const PhaseJet p = V.phase_at(xi, eta, tau);
  const Vec2 gh = c.grad / gn;
  const Vec2 tangential = p.grad - dot(gh, p.grad) * gh;
  return -dot(gh, p.grad) * c.grad - c.value * (c.hess.apply(tangential) / gn + p.hess.apply(gh)) - p.grad_dtau;
}

/// C0 g^ + eps delta1_bar z^ + eps w1_bar, with w1_bar = |C~|/|g| (cos phi~0 grad C0 + sin phi~0 ngrad C0)
/// and ngrad = (d/deta, -d/dxi).
inline Vec3 eval_asymptotic_velocity(const AsymptoticVelocity& V, double xi, double eta, double /*z*/, double tau) {
  const Jet2 c = V.E.jet(xi, eta);
  const double gn = norm(c.grad);
  if (gn <= V.grad_floor) throw Error(ErrorKind::near_critical_point, "gradient below the floor");
  const Vec2 planar = c.value / gn * c.grad;
  const double eps = V.frame.eps;
  const double off = V.phi_offset.eval(xi, eta);
  const Vec2 ngrad{c.grad.y, -c.grad.x};
  const Vec2 w1 = std::abs(V.correction(xi, eta)) / gn * (std::cos(off) * c.grad + std::sin(off) * ngrad);
  const double d1 = quasi_stationary_vertical(V, xi, eta, tau);
  return {planar.x + eps * w1.x, planar.y + eps * w1.y, eps * d1};
}

/// Everything about a slow point (xi, eta) that the composed field needs, independent of z.
struct Column {
  double c0 = 0.0;
  Vec2 g{};
  PhaseJet phase;
  double C_tilde = 0.0;
  double offset = 0.0;
};

inline Column column_at(const AsymptoticVelocity& V, double xi, double eta, double tau) {
  const Jet2 c = V.E.jet(xi, eta);
  return {c.value, c.grad, V.phase_at(xi, eta, tau), V.correction(xi, eta), V.phi_offset.eval(xi, eta)};
}

/// u0 + eps u1 at fast height z, with w = z + phi,
///   u0 = C0 (sin w, cos w, 0)
///   u1 = C~ (sin(w + phi~0), cos(w + phi~0), 0)
///        + z^ [(C0_xi - C0 phi_eta) cos w - (C0_eta + C0 phi_xi) sin w + delta1],  delta1 = -phi_tau.
inline Vec3 composed_velocity(const Column& col, double z, double eps) {
  const double w = z + col.phase.value;
  const double s = std::sin(w), c = std::cos(w);
  const double vz = (col.g.x - col.c0 * col.phase.grad.y) * c - (col.g.y + col.c0 * col.phase.grad.x) * s -
                    col.phase.dtau;
  return {col.c0 * s + eps * col.C_tilde * std::sin(w + col.offset),
          col.c0 * c + eps * col.C_tilde * std::cos(w + col.offset), eps * vz};
}

inline Vec3 composed_velocity(const AsymptoticVelocity& V, double xi, double eta, double z, double tau) {
  return composed_velocity(column_at(V, xi, eta, tau), z, V.frame.eps);
}

struct CollinearityReport {
  int n_slow = 0, n_z = 0;
  double eps = 0.0;
  std::vector<double> defect;      // |u - rot u| at (i, j, k), index i + n_slow*(j + n_slow*k)
  std::vector<double> eps_delta1;  // eps |delta1| at (i, j)
  double defect_l2 = 0.0;
  double reference_l2 = 0.0;
  double relative_mismatch = 0.0;  // ||defect - eps|delta1| ||_2 / ||eps delta1||_2
};

/// u - rot u on a grid, with rot = rot_z + eps rot_{xi eta}; z derivatives spectral over n_z
/// points, slow derivatives by a fourth-order central stencil.
inline CollinearityReport collinearity_defect(const AsymptoticVelocity& V, double tau, int n_slow, int n_z,
                                              double h = 1e-3) {
  if (n_z < 16) throw Error(ErrorKind::invalid_resolution, "at least 16 points per fast period");
  if (n_slow < 1) throw Error(ErrorKind::invalid_resolution, "slow grid must be non-empty");
  const double eps = V.frame.eps;
  CollinearityReport rep;
  rep.n_slow = n_slow;
  rep.n_z = n_z;
  rep.eps = eps;
  rep.defect.assign(static_cast<std::size_t>(n_slow) * n_slow * n_z, 0.0);
  rep.eps_delta1.assign(static_cast<std::size_t>(n_slow) * n_slow, 0.0);
  Fft1D fz(n_z);
  std::vector<Vec3> u(n_z), dzu(n_z);
  double num = 0.0, ref = 0.0, mis = 0.0;
  for (int j = 0; j < n_slow; ++j)
    for (int i = 0; i < n_slow; ++i) {
      const double x = two_pi * i / n_slow, y = two_pi * j / n_slow;
      const Column col = column_at(V, x, y, tau);
      const Column cx[4] = {column_at(V, x - 2 * h, y, tau), column_at(V, x - h, y, tau), column_at(V, x + h, y, tau),
                            column_at(V, x + 2 * h, y, tau)};
      const Column cy[4] = {column_at(V, x, y - 2 * h, tau), column_at(V, x, y - h, tau), column_at(V, x, y + h, tau),
                            column_at(V, x, y + 2 * h, tau)};
      auto d4 = [&](const Column* cs, double z) {
        const Vec3 a = composed_velocity(cs[0], z, eps), b = composed_velocity(cs[1], z, eps);
        const Vec3 c = composed_velocity(cs[2], z, eps), d = composed_velocity(cs[3], z, eps);
        return (1.0 / (12 * h)) * (a - 8.0 * b + 8.0 * c - d);
      };
      for (int k = 0; k < n_z; ++k) u[k] = composed_velocity(col, two_pi * k / n_z, eps);
      // spectral z derivative, component by component
      for (int comp = 0; comp < 3; ++comp) {
        auto data = fz.data();
        for (int k = 0; k < n_z; ++k) data[k] = comp == 0 ? u[k].x : comp == 1 ? u[k].y : u[k].z;
        fz.forward();
        for (int k = 0; k < n_z; ++k) {
          const bool nyq = 2 * k == n_z;
          data[k] = nyq ? cplx{} : cplx(0, wavenumber(k, n_z)) * data[k] / static_cast<double>(n_z);
        }
        fz.backward();
        for (int k = 0; k < n_z; ++k) (comp == 0 ? dzu[k].x : comp == 1 ? dzu[k].y : dzu[k].z) = data[k].real();
      }
      const double ed = eps * std::abs(col.phase.dtau);
      rep.eps_delta1[i + n_slow * j] = ed;
      for (int k = 0; k < n_z; ++k) {
        const double z = two_pi * k / n_z;
        const Vec3 dx = d4(cx, z), dy = d4(cy, z);
        const Vec3 rot{eps * dy.z - dzu[k].y, dzu[k].x - eps * dx.z, eps * (dx.y - dy.x)};
        const double d = norm(u[k] - rot);
        rep.defect[i + n_slow * (j + static_cast<std::size_t>(n_slow) * k)] = d;
        num += d * d;
        ref += ed * ed;
        mis += (d - ed) * (d - ed);
      }
    }
  rep.defect_l2 = std::sqrt(num);
  rep.reference_l2 = std::sqrt(ref);
  rep.relative_mismatch = ref > 0.0 ? std::sqrt(mis / ref) : std::sqrt(num);
  return rep;
}

// ---- stationary-point singularities ---------------------------------------------------------

/// z-vorticity of the gradient-line field C0 g^ in slow variables.
inline double gradient_field_vorticity(const EnergyDensity& E, double xi, double eta) {
  const Jet2 c = E.jet(xi, eta);
  const double gn = norm(c.grad);
  if (gn == 0.0) throw Error(ErrorKind::near_critical_point, "vorticity undefined at a stationary point");
  return c.value * cross(c.grad, c.hess.apply(c.grad)) / (gn * gn * gn);
}

/// Leading-order ring profile r * omega_z at eigen-angle a around a stationary point.
inline double singular_profile(double c0, double l1, double l2, double a) {
  const double ca = std::cos(a), sa = std::sin(a);
  const double q = l1 * l1 * ca * ca + l2 * l2 * sa * sa;
  return c0 * l1 * l2 * (l2 - l1) * ca * sa / std::pow(q, 1.5);
}

struct SingularityFit {
  CriticalPoint point;
  std::vector<double> radii;       // strictly decreasing
  std::vector<double> amplitudes;  // ring mean of |omega_z|
  double slope = 0.0;
  double slope_stderr = 0.0;
  double prefactor = 0.0;          // amplitude ~ prefactor * r^slope
  std::vector<double> angles;      // eigen-frame azimuth
  std::vector<double> angle_profile;  // r * omega_z on the innermost ring
  bool isotropic = false;
};

namespace detail {

struct LineFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0;
};

/// Least-squares line with the standard error of the slope.
inline LineFit linear_fit_full(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.slope_stderr = std::sqrt(ss / (n - 2) / sxx);
  }
  return f;
}

inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline void check_annulus(const CriticalPoint& p, const std::vector<CriticalPoint>& others, double r_max) {
  if (p.degenerate()) throw Error(ErrorKind::degenerate, "stationary point has a singular Hessian");
  for (const auto& q : others) {
    const double d = torus_distance(p.pos(), q.pos());
    if (d > 1e-9 && d <= 2.0 * r_max) throw Error(ErrorKind::geometry, "another stationary point lies near the annulus");
  }
}

inline std::vector<double> log_radii(double r_min, double r_max, int n_r) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n_r < 2) throw Error(ErrorKind::invalid_argument, "need 0 < r_min < r_max and n_r >= 2");
  std::vector<double> r(n_r);
  for (int k = 0; k < n_r; ++k) r[k] = r_max * std::pow(r_min / r_max, static_cast<double>(k) / (n_r - 1));
  return r;
}

}  // namespace detail

inline SingularityFit vertical_singularity_fit(const EnergyDensity& E, const CriticalPoint& point,
                                               const std::vector<CriticalPoint>& others, double r_min = 1e-3,
                                               double r_max = 1e-1, int n_r = 9, int n_phi = 64) {
  detail::check_annulus(point, others, r_max);
  SingularityFit fit;
  fit.point = point;
  fit.radii = detail::log_radii(r_min, r_max, n_r);
  const auto& e = point.eig;
  fit.isotropic = std::abs(e.l1 - e.l2) <= 1e-12 * std::max(std::abs(e.l1), std::abs(e.l2));
  fit.angles.resize(n_phi);
  for (int k = 0; k < n_phi; ++k) fit.angles[k] = two_pi * (k + 0.5) / n_phi;
  for (double r : fit.radii) {
    double acc = 0.0;
    for (double a : fit.angles) {
      const Vec2 p = point.pos() + r * std::cos(a) * e.v1 + r * std::sin(a) * e.v2;
      acc += std::abs(gradient_field_vorticity(E, p.x, p.y));
    }
    fit.amplitudes.push_back(acc / n_phi);
  }
  const double r_in = fit.radii.back();
  for (double a : fit.angles) {
    const Vec2 p = point.pos() + r_in * std::cos(a) * e.v1 + r_in * std::sin(a) * e.v2;
    fit.angle_profile.push_back(r_in * gradient_field_vorticity(E, p.x, p.y));
  }
  if (fit.isotropic) return fit;  // the leading term vanishes identically
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < fit.radii.size(); ++k) {
    lx.push_back(std::log(fit.radii[k]));
    ly.push_back(std::log(fit.amplitudes[k]));
  }
  const auto lf = detail::linear_fit_full(lx, ly);
  fit.slope = lf.slope;
  fit.slope_stderr = lf.slope_stderr;
  fit.prefactor = std::exp(lf.intercept);
  return fit;
}

struct PlaneGrowthReport {
  std::vector<double> times;
  std::vector<double> amplitudes;  // ring mean of |grad delta1_bar| / R at r_probe
  double fitted_rate = 0.0;
  double predicted_rate = 0.0;
  double rate_error = 0.0;         // relative
  double half_radius_ratio = 0.0;  // amplitude(r/2) / amplitude(r) at the last time
};

/// Plane vorticity |rot_{xi eta}(delta1_bar z^)| / R = |grad delta1_bar| / R on a ring of radius r.
inline double plane_vorticity_ring(const AsymptoticVelocity& V, const CriticalPoint& point, double r, double tau,
                                   int n_phi) {
  double acc = 0.0;
  for (int k = 0; k < n_phi; ++k) {
    const double a = two_pi * (k + 0.5) / n_phi;
    const Vec2 p = point.pos() + r * std::cos(a) * point.eig.v1 + r * std::sin(a) * point.eig.v2;
    acc += norm(quasi_stationary_vertical_grad(V, p.x, p.y, tau));
  }
  return acc / n_phi / V.frame.R;
}

inline PlaneGrowthReport plane_component_growth(const AsymptoticVelocity& V, const CriticalPoint& point,
                                                const std::vector<CriticalPoint>& others, const std::vector<double>& times,
                                                double r_probe, double predicted_rate, int n_phi = 64) {
  detail::check_annulus(point, others, r_probe);
  if (times.size() < 2) throw Error(ErrorKind::invalid_argument, "need at least two times");
  PlaneGrowthReport rep;
  rep.times = times;
  rep.predicted_rate = predicted_rate;
  std::vector<double> ly;
  for (double t : times) {
    rep.amplitudes.push_back(plane_vorticity_ring(V, point, r_probe, t, n_phi));
    ly.push_back(std::log(rep.amplitudes.back()));
  }
  if (std::all_of(rep.amplitudes.begin(), rep.amplitudes.end(), [](double a) { return a == 0.0; })) return rep;
  rep.fitted_rate = detail::linear_fit(times, ly).first;
  if (predicted_rate != 0.0) rep.rate_error = std::abs(rep.fitted_rate - predicted_rate) / predicted_rate;
  rep.half_radius_ratio = plane_vorticity_ring(V, point, 0.5 * r_probe, times.back(), n_phi) / rep.amplitudes.back();
  return rep;
}

}  // namespace beltrami
