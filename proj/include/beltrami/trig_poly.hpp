#pragma once

// Finite doubly-periodic trigonometric polynomials
//     p(xi, eta) = sum_{(m,n)} c_{mn} exp(i (m xi + n eta))
// with Hermitian coefficients so that p is real.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <utility>

#include "beltrami/error.hpp"
#include "beltrami/vec.hpp"

namespace beltrami {

using Wavevector = std::pair<int, int>;

/// Value, gradient and Hessian of a scalar field at one point.
struct Jet2 {
  double value = 0.0;
  Vec2 grad{};
  Mat2Sym hess{};
};

class TrigPoly2D {
 public:
  using Coeffs = std::map<Wavevector, std::complex<double>>;

  TrigPoly2D() = default;
  explicit TrigPoly2D(Coeffs c) : terms_(std::move(c)) { prune(); }

  static TrigPoly2D constant(double c) {
    TrigPoly2D p;
    p.add_term(0, 0, c);
    return p;
  }

  /// K sin(xi) sin(eta).
  static TrigPoly2D sin_product(double K) {
    TrigPoly2D p;
    // sin a sin b = (cos(a-b) - cos(a+b)) / 2
    p.add_cos(1, -1, 0.5 * K);
    p.add_cos(1, 1, -0.5 * K);
    return p;
  }

  /// a cos xi + b sin xi + c cos eta + d sin eta + p cos(xi+eta) + q sin(xi+eta).
  static TrigPoly2D arnold(double a, double b, double c, double d, double p, double q) {
    TrigPoly2D t;
    t.add_cos(1, 0, a).add_sin(1, 0, b);
    t.add_cos(0, 1, c).add_sin(0, 1, d);
    t.add_cos(1, 1, p).add_sin(1, 1, q);
    return t;
  }

  /// Adds a c_{mn} exp(i(m xi + n eta)) term without touching the conjugate partner.
  TrigPoly2D& add_term(int m, int n, std::complex<double> c) {
    terms_[{m, n}] += c;
    prune();
    return *this;
  }

  /// Adds a cos(m xi + n eta).
  TrigPoly2D& add_cos(int m, int n, double a) {
    if (m == 0 && n == 0) return add_term(0, 0, a);
    terms_[{m, n}] += 0.5 * a;
    terms_[{-m, -n}] += 0.5 * a;
    prune();
    return *this;
  }

  /// Adds a sin(m xi + n eta).
  TrigPoly2D& add_sin(int m, int n, double a) {
    if (m == 0 && n == 0) return *this;
    terms_[{m, n}] += std::complex<double>(0.0, -0.5 * a);
    terms_[{-m, -n}] += std::complex<double>(0.0, 0.5 * a);
    prune();
    return *this;
  }

  const Coeffs& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  std::complex<double> coeff(int m, int n) const {
    auto it = terms_.find({m, n});
    return it == terms_.end() ? std::complex<double>{} : it->second;
  }

  /// Largest |m| or |n| over the stored terms.
  int degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max({d, std::abs(k.first), std::abs(k.second)});
    return d;
  }

  /// Sum of |c_{mn}|; an upper bound for max |p|.
  double l1_norm() const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) s += std::abs(c);
    return s;
  }

  /// True when every field value is constant (no nonzero wavevector).
  bool is_constant() const {
    for (const auto& [k, c] : terms_)
      if (k.first != 0 || k.second != 0) return false;
    return true;
  }

  /// Largest violation of c(-m,-n) = conj c(m,n).
  double hermitian_defect() const {
    double worst = 0.0;
    for (const auto& [k, c] : terms_)
      worst = std::max(worst, std::abs(c - std::conj(coeff(-k.first, -k.second))));
    return worst;
  }

  /// Replaces coefficients by the Hermitian part (c + conj c(-k)) / 2.
  TrigPoly2D symmetrized() const {
    Coeffs out;
    for (const auto& [k, c] : terms_) {
      const auto partner = std::conj(coeff(-k.first, -k.second));
      out[k] = 0.5 * (c + partner);
      out[{-k.first, -k.second}] = std::conj(out[k]);
    }
    return TrigPoly2D(std::move(out));
  }

  double eval(double xi, double eta) const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) {
      const double arg = k.first * xi + k.second * eta;
      s += c.real() * std::cos(arg) - c.imag() * std::sin(arg);
    }
    return s;
  }

  Vec2 grad(double xi, double eta) const { return jet(xi, eta).grad; }
  Mat2Sym hessian(double xi, double eta) const { return jet(xi, eta).hess; }

  Jet2 jet(double xi, double eta) const {
    Jet2 j;
    for (const auto& [k, c] : terms_) {
      const double m = k.first, n = k.second;
      const double arg = m * xi + n * eta;
      const double ca = std::cos(arg), sa = std::sin(arg);
      const double re = c.real() * ca - c.imag() * sa;  // Re(c e^{i arg})
      const double im = c.real() * sa + c.imag() * ca;  // Im(c e^{i arg})
      j.value += re;
      j.grad.x -= m * im;
      j.grad.y -= n * im;
      j.hess.a -= m * m * re;
      j.hess.b -= m * n * re;
      j.hess.c -= n * n * re;
    }
    return j;
  }

  friend TrigPoly2D operator+(const TrigPoly2D& a, const TrigPoly2D& b) {
    Coeffs out = a.terms_;
    for (const auto& [k, c] : b.terms_) out[k] += c;
    return TrigPoly2D(std::move(out));
  }

  friend TrigPoly2D operator*(double s, const TrigPoly2D& a) {
    Coeffs out = a.terms_;
    for (auto& [k, c] : out) c *= s;
    return TrigPoly2D(std::move(out));
  }

  /// Exact product (convolution of coefficient sets).
  friend TrigPoly2D operator*(const TrigPoly2D& a, const TrigPoly2D& b) {
    Coeffs out;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) out[{ka.first + kb.first, ka.second + kb.second}] += ca * cb;
    return TrigPoly2D(std::move(out));
  }

 private:
  void prune() {
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) == 0.0; });
  }

  Coeffs terms_;
};

}  // namespace beltrami
