#pragma once

// Anisotropic Beltrami modes e_m(z), h_m(z), their closed cross-product algebra,
// and the amplitude dynamics of a Beltrami triplet
//     u = gamma0 e_1(z) + gamma1 h_1(z) + delta z_hat.

#include <cmath>
#include <functional>

#include "beltrami/error.hpp"
#include "beltrami/quadrature.hpp"
#include "beltrami/vec.hpp"

namespace beltrami {

enum class Parity { E, H };

/// e_m(z) = (sin mz, cos mz, 0) for Parity::E, h_m(z) = (cos mz, -sin mz, 0) for Parity::H.
struct BeltramiMode {
  int m = 1;
  Parity parity = Parity::E;
};

inline Vec3 eval_mode(BeltramiMode mode, double z) {
  const double s = std::sin(mode.m * z);
  const double c = std::cos(mode.m * z);
  return mode.parity == Parity::E ? Vec3{s, c, 0.0} : Vec3{c, -s, 0.0};
}

/// Curl of an anisotropic mode from its closed-form z-derivative: (-v_y', v_x', 0).
inline Vec3 mode_curl(BeltramiMode mode, double z) {
  const double m = mode.m;
  const double s = std::sin(mode.m * z);
  const double c = std::cos(mode.m * z);
  if (mode.parity == Parity::E) return {m * s, m * c, 0.0};  // v' = (m c, -m s)
  return {m * c, -m * s, 0.0};                               // v' = (-m s, -m c)
}

/// Max over a uniform z-grid of |curl_fd(mode) - m * mode| with a centered difference.
/// The centered difference of sin(mz) is m cos(mz) sin(mh)/(mh), so the residual is bounded
/// by m^3 h^2 / 6.
inline double curl_residual(BeltramiMode mode, int grid_size) {
  if (grid_size < 8) throw Error(ErrorKind::invalid_resolution, "curl_residual needs grid_size >= 8");
  const double h = two_pi / grid_size;
  double worst = 0.0;
  for (int j = 0; j < grid_size; ++j) {
    const double z = j * h;
    const Vec3 fwd = eval_mode(mode, z + h);
    const Vec3 bwd = eval_mode(mode, z - h);
    const Vec3 d{(fwd.x - bwd.x) / (2 * h), (fwd.y - bwd.y) / (2 * h), 0.0};
    const Vec3 curl{-d.y, d.x, 0.0};
    worst = std::max(worst, norm(curl - mode.m * eval_mode(mode, z)));
  }
  return worst;
}

/// Exact cross product of two anisotropic modes:
///   e_m x e_n = h_m x h_n = (0, 0, sin (m-n)z),  h_m x e_n = (0, 0, cos (m-n)z),
///   e_m x h_n = (0, 0, -cos (m-n)z).
inline Vec3 mode_cross(BeltramiMode a, BeltramiMode b, double z) {
  const double arg = (a.m - b.m) * z;
  if (a.parity == b.parity) return {0.0, 0.0, std::sin(arg)};
  if (a.parity == Parity::H) return {0.0, 0.0, std::cos(arg)};
  return {0.0, 0.0, -std::cos(arg)};
}

/// Members of the closed set {e_m, h_m, z_hat}.
enum class TripletBasis { E, H, Z };

inline Vec3 eval_basis(TripletBasis b, int m, double z) {
  switch (b) {
    case TripletBasis::E: return eval_mode({m, Parity::E}, z);
    case TripletBasis::H: return eval_mode({m, Parity::H}, z);
    case TripletBasis::Z: return {0.0, 0.0, 1.0};
  }
  return {};
}

/// Closed-form products within {e_m, h_m, z_hat}:
///   e x h = -z_hat, e x z_hat = h, h x z_hat = -e (and antisymmetric partners).
inline Vec3 basis_cross(TripletBasis a, TripletBasis b, int m, double z) {
  using TB = TripletBasis;
  if (a == b) return {};
  const Vec3 e = eval_mode({m, Parity::E}, z);
  const Vec3 h = eval_mode({m, Parity::H}, z);
  if (a == TB::E && b == TB::H) return {0.0, 0.0, -1.0};
  if (a == TB::H && b == TB::E) return {0.0, 0.0, 1.0};
  if (a == TB::E && b == TB::Z) return h;
  if (a == TB::Z && b == TB::E) return -h;
  if (a == TB::H && b == TB::Z) return -e;
  return e;  // Z x H
}

/// Amplitudes of a Beltrami triplet at time t.
struct TripletState {
  double gamma0 = 1.0;
  double gamma1 = 0.0;
  double delta = 0.0;
  double A = 1.0;
  double R = 100.0;
  double t = 0.0;

  double amplitude() const { return std::hypot(gamma0, gamma1); }
  /// phi with (gamma0, gamma1) = |gamma| (cos phi, sin phi).
  double phase() const { return std::atan2(gamma1, gamma0); }
};

/// Closed-form evolution of the triplet amplitude system
///     gamma0' = delta gamma1 - gamma0/R,   gamma1' = -delta gamma0 - gamma1/R:
/// the energy decays as exp(-2 (t - t0)/R) and phi(t) = phi(t0) - int delta dt, the
/// integral taken by adaptive Simpson quadrature at `tol`.
inline TripletState triplet_evolve(const TripletState& s0, const std::function<double(double)>& delta_fn,
                                   double t_end, double tol) {
  if (t_end < s0.t) throw Error(ErrorKind::invalid_argument, "t_end precedes the initial time");
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  if (!(s0.R > 0.0)) throw Error(ErrorKind::invalid_reynolds, "R must be positive");
  const double turned = adaptive_simpson(delta_fn, s0.t, t_end, tol);
  const double amp = s0.amplitude() * std::exp(-(t_end - s0.t) / s0.R);
  const double phi = s0.phase() - turned;
  const double d_end = delta_fn(t_end);
  if (!std::isfinite(d_end)) throw Error(ErrorKind::integration, "non-finite delta value");
  TripletState out = s0;
  out.gamma0 = amp * std::cos(phi);
  out.gamma1 = amp * std::sin(phi);
  out.delta = d_end;
  out.t = t_end;
  return out;
}

/// Triplet velocity (C sin(z+phi), C cos(z+phi), delta) with C = |gamma| at the state's time.
inline Vec3 triplet_velocity(const TripletState& s, double z) {
  const double amp = s.amplitude();
  const double phi = s.phase();
  return {amp * std::sin(z + phi), amp * std::cos(z + phi), s.delta};
}

}  // namespace beltrami
