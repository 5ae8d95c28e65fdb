#pragma once

// Phase dynamics in the slow variables:
//   phi_tt = -(1/2) div(C0^2 grad phi)              (ill-posed elliptic Cauchy problem)
// solved by Galerkin truncation |m|, |n| <= M; upward velocity delta1 = -phi_tau; the first
// correction amplitude C~; order bookkeeping for eps = R^{-1/2}; late-time heat decay.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "beltrami/energy_density.hpp"
#include "beltrami/error.hpp"
#include "beltrami/fft.hpp"
#include "beltrami/ode.hpp"
#include "beltrami/quadrature.hpp"
#include "beltrami/streamline.hpp"
#include "beltrami/trig_poly.hpp"

namespace beltrami {

/// Fourier coefficients of phi and phi_tau on the square |m|, |n| <= M.
class PhaseState {
 public:
  PhaseState() = default;
  explicit PhaseState(int cutoff)
      : M_(cutoff), side_(2 * cutoff + 1), phi_(side_ * side_), dphi_(side_ * side_) {
    if (cutoff < 0) throw Error(ErrorKind::invalid_argument, "cutoff must be non-negative");
  }

  int cutoff() const { return M_; }
  int side() const { return side_; }
  std::size_t size() const { return phi_.size(); }
  double tau = 0.0;

  std::size_t index(int m, int n) const { return (m + M_) + side_ * static_cast<std::size_t>(n + M_); }
  int m_of(std::size_t i) const { return static_cast<int>(i % side_) - M_; }
  int n_of(std::size_t i) const { return static_cast<int>(i / side_) - M_; }
  bool contains(int m, int n) const { return std::abs(m) <= M_ && std::abs(n) <= M_; }

  cplx& phi(int m, int n) { return phi_[index(m, n)]; }
  cplx& dphi(int m, int n) { return dphi_[index(m, n)]; }
  cplx phi(int m, int n) const { return contains(m, n) ? phi_[index(m, n)] : cplx{}; }
  cplx dphi(int m, int n) const { return contains(m, n) ? dphi_[index(m, n)] : cplx{}; }
  std::vector<cplx>& phi_coeffs() { return phi_; }
  std::vector<cplx>& dphi_coeffs() { return dphi_; }
  const std::vector<cplx>& phi_coeffs() const { return phi_; }
  const std::vector<cplx>& dphi_coeffs() const { return dphi_; }

  void load(const TrigPoly2D& p, const TrigPoly2D& dp) {
    for (const auto* src : {&p, &dp})
      for (const auto& [k, c] : src->terms()) {
        if (!contains(k.first, k.second)) throw Error(ErrorKind::invalid_argument, "initial data exceed the cutoff");
        (src == &p ? phi_ : dphi_)[index(k.first, k.second)] = c;
      }
  }

  /// Enforces c(-k) = conj c(k) by averaging the pair.
  void symmetrize() {
    for (auto* v : {&phi_, &dphi_})
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::size_t j = v->size() - 1 - i;  // index of (-m, -n)
        if (j < i) continue;
        const cplx avg = 0.5 * ((*v)[i] + std::conj((*v)[j]));
        (*v)[i] = avg;
        (*v)[j] = std::conj(avg);
      }
  }

  double max_abs() const {
    double worst = 0.0;
    for (const auto* v : {&phi_, &dphi_})
      for (const auto& c : *v) worst = std::max(worst, std::abs(c));
    return worst;
  }

  bool finite() const {
    for (const auto* v : {&phi_, &dphi_})
      for (const auto& c : *v)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }

  /// phi, phi_tau and the slow gradient of each at (xi, eta).
  struct Point {
    double phi = 0.0, dphi = 0.0;
    Vec2 grad_phi{}, grad_dphi{};
    Mat2Sym hess_phi{0, 0, 0}, hess_dphi{0, 0, 0};
  };

  Point eval(double xi, double eta) const {
    Point p;
    // e^{i m xi} by recurrence on each axis
    std::vector<cplx> ex(side_), ey(side_);
    const cplx bx = std::polar(1.0, xi), by = std::polar(1.0, eta);
    ex[M_] = ey[M_] = 1.0;
    for (int k = 1; k <= M_; ++k) {
      ex[M_ + k] = ex[M_ + k - 1] * bx;
      ey[M_ + k] = ey[M_ + k - 1] * by;
      ex[M_ - k] = std::conj(ex[M_ + k]);
      ey[M_ - k] = std::conj(ey[M_ + k]);
    }
    for (int n = -M_; n <= M_; ++n)
      for (int m = -M_; m <= M_; ++m) {
        const std::size_t i = index(m, n);
        const cplx e = ex[m + M_] * ey[n + M_];
        const cplx a = phi_[i] * e, b = dphi_[i] * e;
        p.phi += a.real();
        p.dphi += b.real();
        p.grad_phi.x -= m * a.imag();
        p.grad_phi.y -= n * a.imag();
        p.grad_dphi.x -= m * b.imag();
        p.grad_dphi.y -= n * b.imag();
        p.hess_phi.a -= m * m * a.real();
        p.hess_phi.b -= m * n * a.real();
        p.hess_phi.c -= n * n * a.real();
        p.hess_dphi.a -= m * m * b.real();
        p.hess_dphi.b -= m * n * b.real();
        p.hess_dphi.c -= n * n * b.real();
      }
    return p;
  }

  TrigPoly2D phi_poly() const { return to_poly(phi_); }
  TrigPoly2D dphi_poly() const { return to_poly(dphi_); }

 private:
  TrigPoly2D to_poly(const std::vector<cplx>& v) const {
    TrigPoly2D::Coeffs c;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != cplx{}) c[{m_of(i), n_of(i)}] = v[i];
    return TrigPoly2D(std::move(c));
  }

  int M_ = 0;
  int side_ = 1;
  std::vector<cplx> phi_, dphi_;
};

/// Fourier projection of phi(xi, eta, 0) = atan2(gamma1, A b0 + gamma0) onto |m|, |n| <= M,
/// sampled on a 2^p grid with at least 4M + 4 points per axis.
inline TrigPoly2D initial_phase(const EnergyDensity& E, int cutoff) {
  std::size_t n = 8;
  while (n < static_cast<std::size_t>(4 * cutoff + 4)) n *= 2;
  Fft2D fft(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = two_pi * i / n, y = two_pi * j / n;
      fft.at(i, j) = std::atan2(E.gamma1().eval(x, y), E.A() * E.b0() + E.gamma0().eval(x, y));
    }
  fft.forward();
  TrigPoly2D::Coeffs c;
  for (int b = -cutoff; b <= cutoff; ++b)
    for (int a = -cutoff; a <= cutoff; ++a) {
      const cplx v = fft.at((a + n) % n, (b + n) % n) / static_cast<double>(n * n);
      if (std::abs(v) > 1e-15) c[{a, b}] = v;
    }
  return TrigPoly2D(std::move(c)).symmetrized();
}

/// Default Galerkin cutoff: twice the data degree plus the degree of C0^2.
inline int default_cutoff(const EnergyDensity& E, const TrigPoly2D& phi0, const TrigPoly2D& dphi0) {
  return 2 * (std::max(phi0.degree(), dphi0.degree()) + E.squared_poly().degree());
}

/// Frozen-coefficient growth rate of mode (m, n) under constant C0 = c: c sqrt((m^2+n^2)/2).
inline double mode_growth_rate(double c, int m, int n) { return c * std::sqrt(0.5 * (m * m + n * n)); }

/// Phase with the derivatives the vorticity formulas need.
struct PhaseJet {
  double value = 0.0, dtau = 0.0;
  Vec2 grad{}, grad_dtau{};
  Mat2Sym hess{0, 0, 0};
};
using PhaseJetField = std::function<PhaseJet(double xi, double eta, double tau)>;

inline PhaseField to_phase_field(PhaseJetField f) {
  return [f = std::move(f)](double xi, double eta, double tau) {
    const PhaseJet j = f(xi, eta, tau);
    return PhaseSample{j.value, j.dtau, j.grad};
  };
}

class PhaseSolver {
 public:
  PhaseSolver(const EnergyDensity& E, int cutoff) : M_(cutoff), s_(E.squared_poly()) {
    double c0max = 0.0;
    for (const auto& [k, c] : s_.terms()) c0max += std::abs(c);
    max_rate_ = std::sqrt(c0max) * cutoff;  // sqrt(max C0^2) * sqrt((M^2 + M^2)/2)
  }

  double max_rate() const { return max_rate_; }

  /// (L phi)_k = 1/2 sum_q s_{k-q} (k . q) phi_q, so that phi_tt = L phi.
  void apply(const std::vector<cplx>& phi, std::vector<cplx>& out, const PhaseState& shape) const {
    std::fill(out.begin(), out.end(), cplx{});
    for (std::size_t i = 0; i < out.size(); ++i) {
      const int km = shape.m_of(i), kn = shape.n_of(i);
      cplx acc{};
      for (const auto& [j, s] : s_.terms()) {
        const int qm = km - j.first, qn = kn - j.second;
        if (!shape.contains(qm, qn)) continue;
        acc += s * static_cast<double>(km * qm + kn * qn) * phi[shape.index(qm, qn)];
      }
      out[i] = 0.5 * acc;
    }
  }

  /// One velocity-Verlet step (time-symmetric, second order).
  void step(PhaseState& st, double dt, std::vector<cplx>& acc) const {
    auto& phi = st.phi_coeffs();
    auto& dphi = st.dphi_coeffs();
    if (acc.size() != phi.size()) {
      acc.resize(phi.size());
      apply(phi, acc, st);
    }
    for (std::size_t i = 0; i < phi.size(); ++i) {
      dphi[i] += 0.5 * dt * acc[i];
      phi[i] += dt * dphi[i];
    }
    apply(phi, acc, st);
    for (std::size_t i = 0; i < phi.size(); ++i) dphi[i] += 0.5 * dt * acc[i];
    st.tau += dt;
    st.symmetrize();
  }

 private:
  int M_;
  TrigPoly2D s_;
  double max_rate_ = 0.0;
};

struct PhaseRunOptions {
  double blowup_threshold = 1e100;
  /// keep every k-th state in the history (0: only the final state)
  int record_every = 1;
};

/// Snapshots at uniform spacing; phi between snapshots by cubic Hermite interpolation in tau.
struct PhaseHistory {
  std::vector<PhaseState> states;

  double tau_begin() const { return states.front().tau; }
  double tau_end() const { return states.back().tau; }

  PhaseJet jet(double xi, double eta, double tau) const {
    if (states.empty()) throw Error(ErrorKind::invalid_argument, "empty phase history");
    if (states.size() == 1) {
      const auto p = states.front().eval(xi, eta);
      return {p.phi, p.dphi, p.grad_phi, p.grad_dphi, p.hess_phi};
    }
    const double t0 = tau_begin();
    const double dt = states[1].tau - t0;
    if (tau < t0 - 1e-12 || tau > tau_end() + 1e-12)
      throw Error(ErrorKind::invalid_argument, "tau outside the phase history");
    std::size_t k = static_cast<std::size_t>(std::floor((tau - t0) / dt));
    k = std::min(k, states.size() - 2);
    const double h = states[k + 1].tau - states[k].tau;
    const double s = std::clamp((tau - states[k].tau) / h, 0.0, 1.0);
    const auto a = states[k].eval(xi, eta), b = states[k + 1].eval(xi, eta);
    // cubic Hermite basis and its tau derivative
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = (s * s * s - 2 * s * s + s) * h;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = (s * s * s - s * s) * h;
    const double d00 = (6 * s * s - 6 * s) / h, d10 = 3 * s * s - 4 * s + 1;
    const double d01 = (-6 * s * s + 6 * s) / h, d11 = 3 * s * s - 2 * s;
    PhaseJet out;
    out.value = h00 * a.phi + h10 * a.dphi + h01 * b.phi + h11 * b.dphi;
    out.dtau = d00 * a.phi + d10 * a.dphi + d01 * b.phi + d11 * b.dphi;
    out.grad = h00 * a.grad_phi + h10 * a.grad_dphi + h01 * b.grad_phi + h11 * b.grad_dphi;
    out.grad_dtau = d00 * a.grad_phi + d10 * a.grad_dphi + d01 * b.grad_phi + d11 * b.grad_dphi;
    auto mix = [&](double pa, double qa, double pb, double qb) { return h00 * pa + h10 * qa + h01 * pb + h11 * qb; };
    out.hess = {mix(a.hess_phi.a, a.hess_dphi.a, b.hess_phi.a, b.hess_dphi.a),
                mix(a.hess_phi.b, a.hess_dphi.b, b.hess_phi.b, b.hess_dphi.b),
                mix(a.hess_phi.c, a.hess_dphi.c, b.hess_phi.c, b.hess_dphi.c)};
    return out;
  }

  PhaseSample sample(double xi, double eta, double tau) const {
    const PhaseJet j = jet(xi, eta, tau);
    return {j.value, j.dtau, j.grad};
  }

  PhaseJetField jet_field() const {
    return [this](double xi, double eta, double tau) { return jet(xi, eta, tau); };
  }

  PhaseField field() const {
    return [this](double xi, double eta, double tau) { return sample(xi, eta, tau); };
  }
};

/// Integrates the truncated phase equation to tau_end, recording a history.
inline PhaseHistory phase_cauchy_history(const EnergyDensity& E, const TrigPoly2D& phi_init, const TrigPoly2D& dphi_init,
                                         double tau_end, int cutoff, double dt, const PhaseRunOptions& opt = {}) {
  if (!(dt > 0.0) || !(tau_end >= 0.0)) throw Error(ErrorKind::invalid_argument, "dt must be positive and tau_end non-negative");
  if (cutoff < std::max(phi_init.degree(), dphi_init.degree()))
    throw Error(ErrorKind::invalid_argument, "cutoff below the degree of the initial data");
  if (phi_init.hermitian_defect() > 1e-12 || dphi_init.hermitian_defect() > 1e-12)
    throw Error(ErrorKind::invalid_argument, "initial phase data must be real");
  const PhaseSolver solver(E, cutoff);
  if (dt * solver.max_rate() >= 0.1)
    throw Error(ErrorKind::invalid_argument,
                "dt does not resolve the fastest retained rate (dt * rate = " + std::to_string(dt * solver.max_rate()) + ")");
  PhaseState st(cutoff);
  st.load(phi_init, dphi_init);
  st.symmetrize();
  PhaseHistory hist;
  hist.states.push_back(st);
  const long steps = std::lround(std::ceil(tau_end / dt - 1e-9));
  const double h = steps > 0 ? tau_end / steps : 0.0;
  std::vector<cplx> acc;
  for (long k = 1; k <= steps; ++k) {
    solver.step(st, h, acc);
    if (!st.finite() || st.max_abs() > opt.blowup_threshold)
      throw BlowupError(st.tau, "phase coefficients left the representable range at tau = " + std::to_string(st.tau));
    if (opt.record_every > 0 && (k % opt.record_every == 0 || k == steps)) hist.states.push_back(st);
  }
  if (opt.record_every <= 0 && steps > 0) hist.states.push_back(st);
  return hist;
}

inline PhaseState phase_cauchy_solve(const EnergyDensity& E, const TrigPoly2D& phi_init, const TrigPoly2D& dphi_init,
                                     double tau_end, int cutoff, double dt, const PhaseRunOptions& opt = {}) {
  PhaseRunOptions o = opt;
  o.record_every = 0;
  return phase_cauchy_history(E, phi_init, dphi_init, tau_end, cutoff, dt, o).states.back();
}

/// delta1 = -phi_tau at (xi, eta).
inline double upward_velocity(const PhaseState& st, double xi, double eta) { return -st.eval(xi, eta).dphi; }

/// Analytic frozen-coefficient phase a cosh(sigma tau) cos(m xi + n eta + theta),
/// sigma = c sqrt((m^2 + n^2)/2); exact for constant C0 = c.
struct ModePhase {
  double amplitude = 1e-3;
  int m = 1, n = 0;
  double theta = 0.0;
  double c = 1.0;

  double rate() const { return mode_growth_rate(c, m, n); }

  PhaseSample operator()(double xi, double eta, double tau) const {
    const double s = rate();
    const double arg = m * xi + n * eta + theta;
    const double ch = std::cosh(s * tau), sh = std::sinh(s * tau);
    return {amplitude * ch * std::cos(arg), amplitude * s * sh * std::cos(arg),
            {-amplitude * ch * m * std::sin(arg), -amplitude * ch * n * std::sin(arg)}};
  }

  /// Gradient of phi_tau.
  Vec2 grad_dtau(double xi, double eta, double tau) const {
    const double s = rate();
    const double arg = m * xi + n * eta + theta;
    const double f = -amplitude * s * std::sinh(s * tau) * std::sin(arg);
    return {f * m, f * n};
  }

  /// Hessian of phi.
  Mat2Sym hessian(double xi, double eta, double tau) const {
    const double f = -amplitude * std::cosh(rate() * tau) * std::cos(m * xi + n * eta + theta);
    return {f * m * m, f * m * n, f * n * n};
  }

  PhaseJet jet(double xi, double eta, double tau) const {
    const PhaseSample p = (*this)(xi, eta, tau);
    return {p.value, p.dtau, p.grad, grad_dtau(xi, eta, tau), hessian(xi, eta, tau)};
  }

  PhaseJetField field() const {
    return [*this](double xi, double eta, double tau) { return jet(xi, eta, tau); };
  }
};

// ---- first correction -----------------------------------------------------------------

struct CorrectionOptions {
  double cos_floor = 0.1;
  double eps0 = 0.1;  // the (1 - eps0) margin of the linear-growth bound
  double quad_tol = 1e-10;
};

/// C~ on an n x n grid at one tau, the offset phi~0, B0 = 0 and delta2 = 0.
struct CorrectionField {
  int n = 0;
  double tau = 0.0;
  std::vector<double> C_tilde;  // index i + n*j
  TrigPoly2D phi_offset;
  std::vector<double> B0;
  double delta2 = 0.0;
  double M_bound = 0.0;  // (max C0 + A) / (min|cos phi~0| (1 - eps0))

  double at(int i, int j) const { return C_tilde[i + n * j]; }
};

/// C~(xi, eta, tau) = (1/cos phi~0) int_0^tau [A b0 cos phi(s) - C0] ds at one point.
inline double correction_value(const EnergyDensity& E, const PhaseField& phi, const TrigPoly2D& phi_offset, double xi,
                               double eta, double tau, const CorrectionOptions& opt = {}) {
  const double c = std::cos(phi_offset.eval(xi, eta));
  if (std::abs(c) < opt.cos_floor)
    throw Error(ErrorKind::near_singular_offset, "cos of the phase offset is below cos_floor");
  const double ab = E.A() * E.b0();
  const double c0 = E.eval(xi, eta);
  const double integral =
      adaptive_simpson([&](double s) { return ab * std::cos(phi(xi, eta, s).value) - c0; }, 0.0, tau, opt.quad_tol);
  return integral / c;
}

inline double correction_bound(const EnergyDensity& E, const TrigPoly2D& phi_offset, const CorrectionOptions& opt,
                               int n) {
  double c0max = 0.0, cmin = 1.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = two_pi * i / n, y = two_pi * j / n;
      c0max = std::max(c0max, E.eval(x, y));
      cmin = std::min(cmin, std::abs(std::cos(phi_offset.eval(x, y))));
    }
  return (c0max + E.A() * E.b0()) / (cmin * (1.0 - opt.eps0));
}

inline CorrectionField first_correction(const EnergyDensity& E, const PhaseHistory& hist, const TrigPoly2D& phi_offset,
                                        double tau, int n, const CorrectionOptions& opt = {}) {
  if (n < 1) throw Error(ErrorKind::invalid_resolution, "grid size must be positive");
  if (tau < hist.tau_begin() || tau > hist.tau_end() + 1e-12)
    throw Error(ErrorKind::invalid_argument, "history does not cover [0, tau]");
  CorrectionField cf;
  cf.n = n;
  cf.tau = tau;
  cf.phi_offset = phi_offset;
  cf.C_tilde.assign(static_cast<std::size_t>(n) * n, 0.0);
  cf.B0.assign(static_cast<std::size_t>(n) * n, 0.0);
  const PhaseField phi = hist.field();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      cf.C_tilde[i + n * j] = correction_value(E, phi, phi_offset, two_pi * i / n, two_pi * j / n, tau, opt);
  cf.M_bound = correction_bound(E, phi_offset, opt, n);
  return cf;
}

// ---- order bookkeeping -------------------------------------------------------------------

struct ScalingFrame {
  double R = 1.0;
  double eps = 1.0;

  static ScalingFrame from_reynolds(double R) {
    if (!(R > 1.0)) throw Error(ErrorKind::invalid_reynolds, "R must exceed 1");
    return {R, 1.0 / std::sqrt(R)};
  }
  double slow(double x) const { return eps * x; }
  double slow_time(double t) const { return eps * t; }
  double late_time(double t) const { return t / (R * R); }
  bool admissible() const { return 1.0 / R < eps && eps < 1.0; }
};

struct OrderConsistencyReport {
  ScalingFrame frame;
  double max_C_k_gt_2 = 0.0;     // amplitude from the system without viscous forcing
  double max_C_k_eq_2 = 0.0;     // amplitude |gamma^(1)| from the forced system
  double max_quadrature_C = 0.0; // |C~| from the closed-form integral
  double closure_mismatch = 0.0; // max |Re(e^{-i phi} Gamma) - C~ cos phi~0|
  double M_bound = 0.0;
  double worst_bound_ratio = 0.0;  // max |C~| / (M tau)
  bool bound_holds = true;
};

/// Integrates the first-order amplitude systems from zero data at grid points:
///   k > 2:  g0' =  delta1 g1,                 g1' = -delta1 g0
///   k = 2:  g0' =  delta1 g1 - (C0 cos phi - A b0),   g1' = -delta1 g0 - C0 sin phi
/// with delta1 = -phi_tau and delta2 = 0, and compares the latter with the closed form.
inline OrderConsistencyReport order_consistency_report(double R, const EnergyDensity& E, const PhaseHistory& hist,
                                                       const TrigPoly2D& phi_offset, double tau, int n,
                                                       const CorrectionOptions& copt = {}) {
  OrderConsistencyReport rep;
  rep.frame = ScalingFrame::from_reynolds(R);
  const PhaseField phi = hist.field();
  rep.M_bound = correction_bound(E, phi_offset, copt, n);
  OdeOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  const double ab = E.A() * E.b0();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = two_pi * i / n, y = two_pi * j / n;
      const double c0 = E.eval(x, y);
      auto free_sys = [&](double t, const OdeState<2>& g) {
        const double d1 = -phi(x, y, t).dtau;
        return OdeState<2>{d1 * g[1], -d1 * g[0]};
      };
      auto forced = [&](double t, const OdeState<2>& g) {
        const auto p = phi(x, y, t);
        const double d1 = -p.dtau;
        return OdeState<2>{d1 * g[1] - (c0 * std::cos(p.value) - ab), -d1 * g[0] - c0 * std::sin(p.value)};
      };
      auto keep = [](double, const OdeState<2>&) { return true; };
      const auto a = integrate_dopri45<2>(free_sys, 0.0, {0.0, 0.0}, tau, opt, keep);
      const auto b = integrate_dopri45<2>(forced, 0.0, {0.0, 0.0}, tau, opt, keep);
      rep.max_C_k_gt_2 = std::max(rep.max_C_k_gt_2, std::hypot(a.y[0], a.y[1]));
      rep.max_C_k_eq_2 = std::max(rep.max_C_k_eq_2, std::hypot(b.y[0], b.y[1]));
      const double ct = correction_value(E, phi, phi_offset, x, y, tau, copt);
      rep.max_quadrature_C = std::max(rep.max_quadrature_C, std::abs(ct));
      // Gamma = e^{i phi(tau)} int_0^tau [A b0 e^{-i phi(s)} - C0] ds
      const cplx gamma(b.y[0], b.y[1]);
      const double proj = (std::polar(1.0, -phi(x, y, tau).value) * gamma).real();
      rep.closure_mismatch = std::max(rep.closure_mismatch, std::abs(proj - ct * std::cos(phi_offset.eval(x, y))));
      if (tau > 0.0) {
        const double ratio = std::max(std::abs(ct), std::hypot(b.y[0], b.y[1])) / (rep.M_bound * tau);
        rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, ratio);
        if (ratio > 1.0) rep.bound_holds = false;
      }
    }
  return rep;
}

// ---- late-time decay -------------------------------------------------------------------

/// Exact solution of delta_tau1 = Laplacian(delta): coefficient (m, n) times e^{-(m^2+n^2) tau1}.
inline TrigPoly2D late_time_decay(const TrigPoly2D& delta, double tau1) {
  TrigPoly2D::Coeffs out;
  for (const auto& [k, c] : delta.terms())
    out[k] = c * std::exp(-static_cast<double>(k.first * k.first + k.second * k.second) * tau1);
  return TrigPoly2D(std::move(out));
}

/// Max over an n x n grid of |d/dxi(delta d delta/deta) - d/deta(delta d delta/dxi)| with the
/// outer derivatives taken spectrally from sampled products.
inline double verify_rescaled_cross_term(const TrigPoly2D& delta, std::size_t n = 64) {
  if (n < 4 * static_cast<std::size_t>(std::max(1, delta.degree())) + 2)
    throw Error(ErrorKind::invalid_resolution, "grid too coarse for the polynomial");
  Fft2D a(n), b(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double x = two_pi * i / n, y = two_pi * j / n;
      const Jet2 d = delta.jet(x, y);
      a.at(i, j) = d.value * d.grad.y;  // delta * delta_eta
      b.at(i, j) = d.value * d.grad.x;  // delta * delta_xi
    }
  a.forward();
  b.forward();
  const double norm_fac = 1.0 / static_cast<double>(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double kx = wavenumber(i, n), ky = wavenumber(j, n);
      // drop the unpaired Nyquist modes, whose derivative is not real
      const bool nyq = (2 * i == n) || (2 * j == n);
      const cplx da = nyq ? cplx{} : cplx(0, kx) * a.at(i, j);
      const cplx db = nyq ? cplx{} : cplx(0, ky) * b.at(i, j);
      a.at(i, j) = (da - db) * norm_fac;
    }
  a.backward();
  double worst = 0.0;
  for (const auto& v : a.data()) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace beltrami
