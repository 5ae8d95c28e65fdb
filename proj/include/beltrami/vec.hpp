#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace beltrami {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// Scalar (z-component) cross product.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Rotation by -90 degrees: (a_y, -a_x). Applied to a gradient this is the "ngrad" normal.
constexpr Vec2 normal_of(Vec2 a) { return {a.y, -a.x}; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Eigen-decomposition of a symmetric 2x2 matrix, eigenvalues ordered l1 >= l2.
struct SymEigen2 {
  double l1 = 0.0;
  double l2 = 0.0;
  Vec2 v1{1.0, 0.0};
  Vec2 v2{0.0, 1.0};
};

/// Symmetric 2x2 matrix [[a, b], [b, c]]; used for Hessians of the energy density.
struct Mat2Sym {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  constexpr double det() const { return a * c - b * b; }
  constexpr double trace() const { return a + c; }
  constexpr Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
  double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c)}); }

  SymEigen2 eigen() const {
    const double mean = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    const double rad = std::hypot(half_diff, b);
    SymEigen2 e;
    e.l1 = mean + rad;
    e.l2 = mean - rad;
    if (rad == 0.0) return e;
    // Pick the better-conditioned of the two equivalent eigenvector formulas.
    Vec2 v = (a >= c) ? Vec2{e.l1 - c, b} : Vec2{b, e.l1 - a};
    // nearly isotropic: both entries can round to zero
    if (norm(v) == 0.0) v = (a >= c) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    v = v / norm(v);
    e.v1 = v;
    e.v2 = {-v.y, v.x};
    return e;
  }

  /// Solves M x = r; returns false when the matrix is numerically singular.
  bool solve(Vec2 r, Vec2& x, double rel_tol = 1e-14) const {
    const double d = det();
    const double scale = std::max(max_abs() * max_abs(), 1e-300);
    if (std::abs(d) <= rel_tol * scale) return false;
    x = {(c * r.x - b * r.y) / d, (a * r.y - b * r.x) / d};
    return true;
  }
};

/// Reduces an angle-like coordinate into [0, 2pi).
inline double wrap_2pi(double v) {
  double r = std::fmod(v, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

/// Signed difference a - b reduced to (-pi, pi].
inline double periodic_delta(double a, double b) {
  double d = std::remainder(a - b, two_pi);
  return d;
}

/// Distance between two points of the 2pi-torus.
inline double torus_distance(Vec2 p, Vec2 q) {
  return std::hypot(periodic_delta(p.x, q.x), periodic_delta(p.y, q.y));
}

}  // namespace beltrami
