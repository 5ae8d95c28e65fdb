#pragma once

// Brute-force reference computations used by the tests. Deliberately independent of the
// library's integrators and closed forms: fixed-step RK4, finite differences, direct sums.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

template <std::size_t N>
using State = std::array<double, N>;

/// Classical RK4 with `steps` equal steps from t0 to t1.
template <std::size_t N, class F>
State<N> rk4(F&& f, double t0, State<N> y, double t1, std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  auto add = [](const State<N>& a, double s, const State<N>& b) {
    State<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  double t = t0;
  for (std::size_t k = 0; k < steps; ++k) {
    const State<N> k1 = f(t, y);
    const State<N> k2 = f(t + 0.5 * h, add(y, 0.5 * h, k1));
    const State<N> k3 = f(t + 0.5 * h, add(y, 0.5 * h, k2));
    const State<N> k4 = f(t + h, add(y, h, k3));
    for (std::size_t i = 0; i < N; ++i) y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += h;
  }
  return y;
}

/// RK4 recording every step; returns (t, y) pairs including the start.
template <std::size_t N, class F>
std::vector<std::pair<double, State<N>>> rk4_path(F&& f, double t0, State<N> y, double t1,
                                                  std::size_t steps) {
  std::vector<std::pair<double, State<N>>> out{{t0, y}};
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    y = rk4<N>(f, t0 + k * h, y, t0 + (k + 1) * h, 1);
    out.emplace_back(t0 + (k + 1) * h, y);
  }
  return out;
}

/// Central first difference of a scalar function of two variables.
template <class F>
std::array<double, 2> fd_grad(F&& f, double x, double y, double h = 1e-5) {
  return {(f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h)};
}

/// Second differences: (f_xx, f_xy, f_yy).
template <class F>
std::array<double, 3> fd_hessian(F&& f, double x, double y, double h = 1e-4) {
  const double f0 = f(x, y);
  const double fxx = (f(x + h, y) - 2 * f0 + f(x - h, y)) / (h * h);
  const double fyy = (f(x, y + h) - 2 * f0 + f(x, y - h)) / (h * h);
  const double fxy =
      (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
  return {fxx, fxy, fyy};
}

/// Explicit heat stepping u_t = u_xx + u_yy on an n x n periodic grid of [0, 2pi)^2 with an
/// 8th-order central Laplacian and RK4 in time. Grid index i + n*j.
inline std::vector<double> heat_fd(std::vector<double> u, int n, double t_end, double cfl = 0.05) {
  const double h = 2 * M_PI / n;
  // 8th-order central second-derivative weights for offsets 0..4
  const double w[5] = {-205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
  auto lap = [&](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    auto at = [&](int i, int j) { return v[((i % n + n) % n) + n * ((j % n + n) % n)]; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double s = 2 * w[0] * at(i, j);
        for (int o = 1; o <= 4; ++o) s += w[o] * (at(i + o, j) + at(i - o, j) + at(i, j + o) + at(i, j - o));
        r[i + n * j] = s / (h * h);
      }
    return r;
  };
  const int steps = static_cast<int>(std::ceil(t_end / (cfl * h * h)));
  const double dt = t_end / steps;
  std::vector<double> tmp(u.size());
  for (int s = 0; s < steps; ++s) {
    const auto k1 = lap(u);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    const auto k2 = lap(tmp);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    const auto k3 = lap(tmp);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + dt * k3[i];
    const auto k4 = lap(tmp);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return u;
}

/// Circulation of a planar field around a circle of radius r divided by the enclosed area:
/// approximates the z-vorticity at the centre with O(r^2) error. Periodic trapezoid in angle.
template <class V>
double circulation_curl(V&& field, double cx, double cy, double r, int n_theta = 256) {
  double circ = 0.0;
  for (int k = 0; k < n_theta; ++k) {
    const double th = 2 * M_PI * k / n_theta;
    const auto v = field(cx + r * std::cos(th), cy + r * std::sin(th));
    circ += -v[0] * std::sin(th) + v[1] * std::cos(th);
  }
  circ *= r * 2 * M_PI / n_theta;
  return circ / (M_PI * r * r);
}

}  // namespace oracle
