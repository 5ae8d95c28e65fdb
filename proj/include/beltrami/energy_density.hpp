#pragma once

// Energy density C0(xi, eta) = [(A b0 + gamma0)^2 + gamma1^2]^{1/2} and its exact derivatives.

#include <cmath>
#include <string>

#include "beltrami/error.hpp"
#include "beltrami/trig_poly.hpp"
#include "beltrami/vec.hpp"

namespace beltrami {

class EnergyDensity {
 public:
  EnergyDensity() : EnergyDensity(1.0, 1.0, {}, {}) {}

  EnergyDensity(double A, double b0, TrigPoly2D gamma0, TrigPoly2D gamma1)
      : A_(A), b0_(b0), g0_(std::move(gamma0)), g1_(std::move(gamma1)) {
    if (!std::isfinite(A_) || !std::isfinite(b0_))
      throw Error(ErrorKind::invalid_argument, "A and b0 must be finite");
    if (g0_.hermitian_defect() > 1e-12 || g1_.hermitian_defect() > 1e-12)
      throw Error(ErrorKind::invalid_argument, "modulations must be real (Hermitian coefficients)");
    // Sufficient condition: |gamma0| + |gamma1| < A b0 everywhere.
    positive_ = g0_.l1_norm() + g1_.l1_norm() < std::abs(A_ * b0_);
  }

  double A() const { return A_; }
  double b0() const { return b0_; }
  const TrigPoly2D& gamma0() const { return g0_; }
  const TrigPoly2D& gamma1() const { return g1_; }
  /// Whether the construction-time positivity bound holds.
  bool positivity_guaranteed() const { return positive_; }
  int degree() const { return std::max(g0_.degree(), g1_.degree()); }
  bool is_constant() const { return g0_.is_constant() && g1_.is_constant(); }

  /// C0^2 = (A b0 + gamma0)^2 + gamma1^2 as an exact trigonometric polynomial.
  TrigPoly2D squared_poly() const {
    const TrigPoly2D shifted = TrigPoly2D::constant(A_ * b0_) + g0_;
    return shifted * shifted + g1_ * g1_;
  }

  double eval(double xi, double eta) const {
    const double u = A_ * b0_ + g0_.eval(xi, eta);
    const double v = g1_.eval(xi, eta);
    return checked_root(u * u + v * v);
  }

  /// Value, gradient and Hessian of C0 by the chain rule on the modulations:
  ///   C0 grad C0 = u grad u + v grad v
  ///   C0 H = grad u grad u^T + u H_u + grad v grad v^T + v H_v - grad C0 grad C0^T
  Jet2 jet(double xi, double eta) const {
    Jet2 ju = g0_.jet(xi, eta);
    const Jet2 jv = g1_.jet(xi, eta);
    ju.value += A_ * b0_;
    const double c0 = checked_root(ju.value * ju.value + jv.value * jv.value);
    Jet2 out;
    out.value = c0;
    out.grad = (ju.value * ju.grad + jv.value * jv.grad) / c0;
    const Vec2 gu = ju.grad, gv = jv.grad, g = out.grad;
    out.hess.a = (gu.x * gu.x + ju.value * ju.hess.a + gv.x * gv.x + jv.value * jv.hess.a - g.x * g.x) / c0;
    out.hess.b = (gu.x * gu.y + ju.value * ju.hess.b + gv.x * gv.y + jv.value * jv.hess.b - g.x * g.y) / c0;
    out.hess.c = (gu.y * gu.y + ju.value * ju.hess.c + gv.y * gv.y + jv.value * jv.hess.c - g.y * g.y) / c0;
    return out;
  }

  Vec2 grad(double xi, double eta) const { return jet(xi, eta).grad; }
  Mat2Sym hessian(double xi, double eta) const { return jet(xi, eta).hess; }

 private:
  static double checked_root(double sq) {
    if (!(sq > 0.0)) throw Error(ErrorKind::invalid_argument, "energy density is not positive here");
    return std::sqrt(sq);
  }

  double A_, b0_;
  TrigPoly2D g0_, g1_;
  bool positive_ = true;
};

inline double c0_eval(const EnergyDensity& E, double xi, double eta) { return E.eval(xi, eta); }
inline Vec2 c0_grad(const EnergyDensity& E, double xi, double eta) { return E.grad(xi, eta); }
inline Mat2Sym c0_hessian(const EnergyDensity& E, double xi, double eta) { return E.hessian(xi, eta); }

inline double poly_eval(const TrigPoly2D& p, double xi, double eta) { return p.eval(xi, eta); }
inline Vec2 poly_grad(const TrigPoly2D& p, double xi, double eta) { return p.grad(xi, eta); }

}  // namespace beltrami
