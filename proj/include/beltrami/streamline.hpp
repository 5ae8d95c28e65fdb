#pragma once

// Large-scale streamlines in the slow variables:
//     xi' = C0 sin w,  eta' = C0 cos w,  w' = dC0/dxi cos w - dC0/deta sin w,   w = z + phi,
// their quasi-stationary reduction (w slaved to the gradient direction) and gradient lines
// of C0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "beltrami/energy_density.hpp"
#include "beltrami/error.hpp"
#include "beltrami/ode.hpp"
#include "beltrami/vec.hpp"

namespace beltrami {

/// Value, time derivative and slow gradient of the phase at (xi, eta, tau).
struct PhaseSample {
  double value = 0.0;
  double dtau = 0.0;
  Vec2 grad{};
};

using PhaseField = std::function<PhaseSample(double xi, double eta, double tau)>;

inline PhaseField zero_phase() {
  return [](double, double, double) { return PhaseSample{}; };
}

struct TrajSample {
  double tau = 0.0;
  double xi = 0.0;
  double eta = 0.0;
  double z = 0.0;
  /// Running integral of |grad C0| along the path (gradient and quasi-stationary traces).
  double grad_integral = 0.0;
};

enum class Termination { reached_tau_end, entered_critical_ball, step_failure };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::reached_tau_end: return "reached_tau_end";
    case Termination::entered_critical_ball: return "entered_critical_ball";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<TrajSample> samples;
  Termination termination = Termination::reached_tau_end;
  /// Critical point whose ball was entered (reduced to [0, 2pi)^2), if any.
  std::optional<Vec2> endpoint;
  /// Index into a caller-held critical-point table; -1 when not assigned.
  int endpoint_id = -1;
};

struct TraceOptions {
  double max_step = 0.05;       // spatial step cap
  double grad_floor = 1e-8;     // below this the gradient direction is undefined
  double stop_radius = 1e-3;    // critical-ball radius
  double h_min = 1e-14;
  std::size_t max_steps = 2'000'000;
  /// Critical point whose ball is not a terminal (used when launching from a saddle).
  std::optional<Vec2> ignore_point;
};

enum class Direction { ascend, descend };

/// w_bar with sin w_bar = dC0/dxi / |grad C0| and cos w_bar = dC0/deta / |grad C0|.
inline double quasi_stationary_angle(const EnergyDensity& E, double xi, double eta, double grad_floor = 1e-8) {
  const Vec2 g = E.grad(xi, eta);
  if (norm(g) <= grad_floor)
    throw Error(ErrorKind::near_critical_point, "gradient below floor; quasi-stationary angle undefined");
  return std::atan2(g.x, g.y);
}

/// Rate of change of w_bar along the gradient direction per unit arclength (signed curvature
/// of the gradient line): grad(w_bar) . g_hat.
inline double gradient_line_curvature(const Jet2& j) {
  const double gn2 = dot(j.grad, j.grad);
  const Vec2 gh = j.grad / std::sqrt(gn2);
  const Vec2 Hg = j.hess.apply(gh);
  return (j.grad.y * Hg.x - j.grad.x * Hg.y) / gn2;
}

/// Damped Newton on grad C0 = 0 with a pseudo-inverse when the Hessian is singular.
/// Returns nullopt when the iteration does not reach |grad| < tol.
inline std::optional<Vec2> newton_critical(const EnergyDensity& E, Vec2 p, double tol, int max_iter = 50) {
  for (int it = 0; it < max_iter; ++it) {
    const Jet2 j = E.jet(p.x, p.y);
    const double gn = norm(j.grad);
    if (gn < tol) return p;
    const SymEigen2 ev = j.hess.eigen();
    const double cut = 1e-12 * std::max(std::abs(ev.l1), std::abs(ev.l2));
    Vec2 step{};
    for (const auto& [l, v] : {std::pair{ev.l1, ev.v1}, std::pair{ev.l2, ev.v2}})
      if (std::abs(l) > cut && l != 0.0) step -= (dot(v, j.grad) / l) * v;
    if (norm(step) == 0.0) return std::nullopt;
    // keep the step local: Newton from far away may jump across the torus
    const double cap = 0.5;
    if (norm(step) > cap) step = step * (cap / norm(step));
    double lam = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k) {
      const Vec2 q = p + lam * step;
      if (norm(E.grad(q.x, q.y)) < gn) {
        p = q;
        improved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!improved) return norm(E.grad(p.x, p.y)) < tol ? std::optional<Vec2>(p) : std::nullopt;
  }
  return norm(E.grad(p.x, p.y)) < tol ? std::optional<Vec2>(p) : std::nullopt;
}

namespace detail {

/// Length of the Newton step |H^{-1} g|: distance estimate to the nearest critical point.
inline double newton_distance(const Jet2& j) {
  Vec2 x;
  if (!j.hess.solve(j.grad, x)) return std::numeric_limits<double>::infinity();
  return norm(x);
}

struct BallHit {
  bool hit = false;
  Vec2 point{};
  double distance = std::numeric_limits<double>::infinity();
};

/// Checks whether p lies within `radius` of a critical point that is not the ignored one.
inline BallHit critical_ball(const EnergyDensity& E, Vec2 p, const TraceOptions& opt) {
  const Jet2 j = E.jet(p.x, p.y);
  BallHit b;
  b.distance = newton_distance(j);
  if (b.distance >= opt.stop_radius && norm(j.grad) > opt.grad_floor) return b;
  const auto root = newton_critical(E, p, 1e-12);
  if (!root) {
    if (norm(j.grad) <= opt.grad_floor) {
      b.hit = true;
      b.point = p;
    }
    return b;
  }
  const double d = torus_distance(*root, p);
  if (opt.ignore_point && torus_distance(*root, *opt.ignore_point) < 1e-6) {
    b.distance = std::numeric_limits<double>::infinity();
    return b;
  }
  b.distance = d;
  if (d < opt.stop_radius) {
    b.hit = true;
    b.point = {wrap_2pi(root->x), wrap_2pi(root->y)};
  }
  return b;
}

}  // namespace detail

/// Free streamline of the scaled system, state (xi, eta, w = z + phi). The z column of the
/// output is w - phi(xi, eta, tau).
inline Trajectory integrate_streamline(const EnergyDensity& E, const PhaseField& phi, Vec3 start,
                                       double tau_end, double tol, const TraceOptions& topt = {}) {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  {
    // the phase gradient must be consistent with its values
    const double h = 1e-6;
    const auto p0 = phi(start.x, start.y, 0.0);
    const double gx = (phi(start.x + h, start.y, 0.0).value - phi(start.x - h, start.y, 0.0).value) / (2 * h);
    const double gy = (phi(start.x, start.y + h, 0.0).value - phi(start.x, start.y - h, 0.0).value) / (2 * h);
    const double scale = 1.0 + norm(p0.grad);
    if (std::abs(gx - p0.grad.x) > 1e-5 * scale || std::abs(gy - p0.grad.y) > 1e-5 * scale)
      throw Error(ErrorKind::precondition, "phase callback gradient disagrees with its values");
  }
  auto rhs = [&E](double, const OdeState<3>& y) {
    const Jet2 j = E.jet(y[0], y[1]);
    const double s = std::sin(y[2]), c = std::cos(y[2]);
    return OdeState<3>{j.value * s, j.value * c, j.grad.x * c - j.grad.y * s};
  };
  Trajectory tr;
  auto record = [&](double t, const OdeState<3>& y) {
    tr.samples.push_back({t, y[0], y[1], y[2] - phi(y[0], y[1], t).value, 0.0});
    return true;
  };
  const OdeState<3> y0{start.x, start.y, start.z + phi(start.x, start.y, 0.0).value};
  record(0.0, y0);
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  opt.h_min = topt.h_min;
  opt.max_steps = topt.max_steps;
  const double c0max = E.A() * E.b0() + E.gamma0().l1_norm() + E.gamma1().l1_norm();
  opt.h_max = topt.max_step / std::max(c0max, 1e-300);
  const auto res = integrate_dopri45<3>(rhs, 0.0, y0, tau_end, opt, record);
  tr.termination = res.status == OdeStatus::step_failure ? Termination::step_failure : Termination::reached_tau_end;
  return tr;
}

namespace detail {

/// Integrates sigma' = sign * C0 g_hat together with the running integral of |g|.
/// `z_of` maps (tau, xi, eta) to the z column.
template <class ZOf>
Trajectory trace_planar(const EnergyDensity& E, Vec2 start, double sign, double tau_max, double tol,
                        const TraceOptions& topt, ZOf&& z_of) {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  const BallHit at_start = critical_ball(E, start, topt);
  if (at_start.hit)
    throw Error(ErrorKind::near_critical_point, "start lies inside a critical ball");

  bool field_failed = false;
  auto rhs = [&](double, const OdeState<3>& y) {
    const Jet2 j = E.jet(y[0], y[1]);
    const double gn = norm(j.grad);
    if (gn <= topt.grad_floor) {
      field_failed = true;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return OdeState<3>{nan, nan, nan};
    }
    const Vec2 v = (sign * j.value / gn) * j.grad;
    return OdeState<3>{v.x, v.y, gn};
  };

  Trajectory tr;
  BallHit last;
  auto observe = [&](double t, const OdeState<3>& y) {
    tr.samples.push_back({t, y[0], y[1], z_of(t, y[0], y[1]), y[2]});
    last = critical_ball(E, {y[0], y[1]}, topt);
    return !last.hit;
  };
  // cap steps so that a ball is entered rather than jumped over
  auto limit = [&](double, const OdeState<3>& y) {
    const Jet2 j = E.jet(y[0], y[1]);
    double d = newton_distance(j);
    if (topt.ignore_point && torus_distance({y[0], y[1]}, *topt.ignore_point) < 2 * topt.stop_radius)
      d = std::max(d, torus_distance({y[0], y[1]}, *topt.ignore_point));
    if (d > 0.2) return std::numeric_limits<double>::infinity();
    return 0.5 * std::max(d, 0.1 * topt.stop_radius) / j.value;
  };

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  opt.h_min = topt.h_min;
  opt.max_steps = topt.max_steps;
  const double c0max = E.A() * E.b0() + E.gamma0().l1_norm() + E.gamma1().l1_norm();
  opt.h_max = topt.max_step / std::max(c0max, 1e-300);
  const OdeState<3> y0{start.x, start.y, 0.0};
  tr.samples.push_back({0.0, start.x, start.y, z_of(0.0, start.x, start.y), 0.0});
  const auto res = integrate_dopri45<3>(rhs, 0.0, y0, tau_max, opt, observe, limit);
  if (last.hit) {
    tr.termination = Termination::entered_critical_ball;
    tr.endpoint = last.point;
  } else if (res.status == OdeStatus::step_failure || field_failed) {
    tr.termination = Termination::step_failure;
  } else {
    tr.termination = Termination::reached_tau_end;
  }
  return tr;
}

}  // namespace detail

/// Gradient line sigma' = +-C0 grad C0 / |grad C0|; terminates inside a critical ball.
inline Trajectory trace_gradient_line(const EnergyDensity& E, Vec2 start, Direction dir, double tau_max,
                                      double tol, const TraceOptions& topt = {}) {
  const double sign = dir == Direction::ascend ? 1.0 : -1.0;
  return detail::trace_planar(E, start, sign, tau_max, tol, topt, [](double, double, double) { return 0.0; });
}

/// Quasi-stationary trajectory: the streamline equations with z + phi held at w_bar, so
/// d(z + phi)/dtau = 0 identically. The z column is w_bar - phi.
inline Trajectory integrate_quasi_stationary(const EnergyDensity& E, const PhaseField& phi, Vec2 start,
                                             double tau_end, double tol, const TraceOptions& topt = {}) {
  return detail::trace_planar(E, start, 1.0, tau_end, tol, topt, [&](double t, double x, double y) {
    const Vec2 g = E.grad(x, y);
    return std::atan2(g.x, g.y) - phi(x, y, t).value;
  });
}

/// Residual of the streamline w-equation for a path held at w_bar: max C0 |dw_bar/ds| along
/// the samples, i.e. how far the path is from being an exact solution with w = w_bar.
inline double quasi_stationary_residual(const EnergyDensity& E, const Trajectory& base) {
  double worst = 0.0;
  for (const auto& s : base.samples) {
    const Jet2 j = E.jet(s.xi, s.eta);
    if (norm(j.grad) == 0.0) continue;
    worst = std::max(worst, j.value * std::abs(gradient_line_curvature(j)));
  }
  return worst;
}

/// Largest |w - w_bar| along a free streamline, w = z + phi.
inline double quasi_stationary_deviation(const EnergyDensity& E, const PhaseField& phi, const Trajectory& tr) {
  double worst = 0.0;
  for (const auto& s : tr.samples) {
    const double w = s.z + phi(s.xi, s.eta, s.tau).value;
    worst = std::max(worst, std::abs(periodic_delta(w, quasi_stationary_angle(E, s.xi, s.eta))));
  }
  return worst;
}

/// Largest relative error of C0(tau) = C0(0) exp(int |grad C0|) along a quasi-stationary path.
inline double growth_law_error(const EnergyDensity& E, const Trajectory& tr) {
  if (tr.samples.empty()) return 0.0;
  const double c00 = E.eval(tr.samples.front().xi, tr.samples.front().eta);
  double worst = 0.0;
  for (const auto& s : tr.samples) {
    const double c = E.eval(s.xi, s.eta);
    worst = std::max(worst, std::abs(c - c00 * std::exp(s.grad_integral)) / c);
  }
  return worst;
}

struct StabilityReport {
  std::vector<double> times;
  std::vector<double> w_tilde;          // measured |w - w_bar| on the perturbed streamline
  std::vector<double> w_tilde_scalar;   // w0 exp(-int |grad C0|) along the base
  std::vector<double> predicted_rate_curve;  // |grad C0| along the base
  double fitted_rate = 0.0;     // least-squares slope of -log w_tilde
  double predicted_rate = 0.0;  // least-squares slope of int |grad C0|
  double m = 0.0;               // min |grad C0| on the base
  double M = 0.0;               // max |grad C0| on the base
  bool bound_holds = true;      // w_tilde <= w0 exp(-m (tau - tau0)) at every sample
  double worst_bound_ratio = 0.0;
};

struct StabilityOptions {
  double residual_tol = 1e-6;
  double tol = 1e-10;
  double bound_slack = 1e-9;
};

/// Perturbs the direction angle of a quasi-stationary base path by w0 and follows the free
/// streamline; the perturbation is measured against w_bar at the perturbed position.
inline StabilityReport stability_probe(const EnergyDensity& E, const Trajectory& base, double w0,
                                       const StabilityOptions& so = {}) {
  if (base.samples.size() < 3) throw Error(ErrorKind::invalid_argument, "base trajectory too short");
  if (!(std::abs(w0) > 0.0 && std::abs(w0) <= 0.1))
    throw Error(ErrorKind::invalid_argument, "perturbation must satisfy 0 < |w0| <= 0.1");
  const double res = quasi_stationary_residual(E, base);
  if (res > so.residual_tol)
    throw Error(ErrorKind::precondition, "base is not quasi-stationary (residual " + std::to_string(res) + ")");

  const auto& s0 = base.samples.front();
  const double tau0 = s0.tau;
  const double tau_end = base.samples.back().tau;
  const double wbar0 = quasi_stationary_angle(E, s0.xi, s0.eta);
  const Trajectory pert = integrate_streamline(E, zero_phase(), {s0.xi, s0.eta, wbar0 + w0}, tau_end - tau0, so.tol);

  StabilityReport rep;
  rep.m = std::numeric_limits<double>::infinity();
  for (const auto& s : base.samples) {
    const double g = norm(E.grad(s.xi, s.eta));
    rep.predicted_rate_curve.push_back(g);
    rep.m = std::min(rep.m, g);
    rep.M = std::max(rep.M, g);
  }
  // running integral of |g| along the base for the scalar law
  std::vector<double> base_tau, base_int;
  for (const auto& s : base.samples) {
    base_tau.push_back(s.tau - tau0);
    base_int.push_back(s.grad_integral - s0.grad_integral);
  }
  auto base_integral_at = [&](double t) {
    auto it = std::lower_bound(base_tau.begin(), base_tau.end(), t);
    if (it == base_tau.begin()) return base_int.front();
    if (it == base_tau.end()) return base_int.back();
    const std::size_t k = it - base_tau.begin();
    const double f = (t - base_tau[k - 1]) / (base_tau[k] - base_tau[k - 1]);
    return base_int[k - 1] + f * (base_int[k] - base_int[k - 1]);
  };

  double sx = 0, sy = 0, sz = 0, sxx = 0, sxy = 0, sxz = 0;
  for (const auto& p : pert.samples) {
    const double w = p.z;  // phase is zero here, so z = w
    const double wt = std::abs(periodic_delta(w, quasi_stationary_angle(E, p.xi, p.eta)));
    const double t = p.tau;
    const double integral = base_integral_at(t);
    rep.times.push_back(t + tau0);
    rep.w_tilde.push_back(wt);
    rep.w_tilde_scalar.push_back(std::abs(w0) * std::exp(-integral));
    const double bound = std::abs(w0) * std::exp(-rep.m * t);
    const double ratio = wt / bound;
    rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, ratio);
    if (wt > bound * (1.0 + so.bound_slack)) rep.bound_holds = false;
    const double ly = -std::log(wt);
    sx += t;
    sy += ly;
    sz += integral;
    sxx += t * t;
    sxy += t * ly;
    sxz += t * integral;
  }
  const double n = static_cast<double>(pert.samples.size());
  const double den = n * sxx - sx * sx;
  rep.fitted_rate = (n * sxy - sx * sy) / den;
  rep.predicted_rate = (n * sxz - sx * sz) / den;
  return rep;
}

}  // namespace beltrami
