#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace beltrami {

template <std::size_t N>
using OdeState = std::array<double, N>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0;  // 0 selects a starting step from the tolerance
  double h_min = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 1'000'000;
};

enum class OdeStatus { reached_end, stopped, step_failure };

template <std::size_t N>
struct OdeResult {
  double t = 0.0;
  OdeState<N> y{};
  OdeStatus status = OdeStatus::reached_end;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace detail {

template <std::size_t N>
inline bool all_finite(const OdeState<N>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

struct NoLimit {
  template <std::size_t N>
  double operator()(double, const OdeState<N>&) const {
    return std::numeric_limits<double>::infinity();
  }
};

}  // namespace detail

/// Dormand-Prince 5(4) with a PI step-size controller (Hairer, Norsett & Wanner, II.4).
///
/// `observe(t, y)` is called after every accepted step and returns false to stop.
/// `limit(t, y)` caps the next step length; trackers use it to avoid stepping over
/// event regions.
template <std::size_t N, class Rhs, class Observer, class Limiter = detail::NoLimit>
OdeResult<N> integrate_dopri45(Rhs&& f, double t0, OdeState<N> y0, double t_end,
                               const OdeOptions& opt, Observer&& observe,
                               Limiter&& limit = Limiter{}) {
  using S = OdeState<N>;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
  constexpr double beta = 0.04, expo = 0.2 - 0.75 * beta;

  OdeResult<N> res;
  res.t = t0;
  res.y = y0;
  if (t_end <= t0) return res;

  auto axpy = [](const S& y, double h, std::initializer_list<std::pair<double, const S*>> terms) {
    S out = y;
    for (std::size_t i = 0; i < N; ++i) {
      double acc = 0.0;
      for (const auto& [c, k] : terms) acc += c * (*k)[i];
      out[i] += h * acc;
    }
    return out;
  };

  double t = t0;
  S y = y0;
  S k1 = f(t, y);
  if (!detail::all_finite(k1)) {
    res.status = OdeStatus::step_failure;
    return res;
  }

  double h = opt.h_init;
  if (h <= 0.0) {
    double sc = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double w = opt.atol + opt.rtol * std::abs(y[i]);
      sc += (y[i] / w) * (y[i] / w);
      dn += (k1[i] / w) * (k1[i] / w);
    }
    sc = std::sqrt(sc / N);
    dn = std::sqrt(dn / N);
    h = (sc < 1e-5 || dn < 1e-5) ? 1e-6 : 0.01 * sc / dn;
    h = std::min(h, 0.1 * (t_end - t0));
  }
  double err_prev = 1e-4;

  while (t < t_end) {
    if (res.accepted + res.rejected >= opt.max_steps) {
      res.status = OdeStatus::step_failure;
      break;
    }
    const double cap = std::min(opt.h_max, limit(t, y));
    h = std::min({h, cap, t_end - t});
    if (h < opt.h_min && t_end - t > opt.h_min) {
      res.status = OdeStatus::step_failure;
      break;
    }
    const S k2 = f(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const S k3 = f(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const S k4 = f(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const S k5 = f(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const S k6 =
        f(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const S y_new =
        axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const S k7 = f(t + h, y_new);

    double err = 0.0;
    bool finite = detail::all_finite(y_new) && detail::all_finite(k7);
    if (finite) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                               e6 * k6[i] + e7 * k7[i]);
        const double w = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err += (ei / w) * (ei / w);
      }
      err = std::sqrt(err / N);
      finite = std::isfinite(err);
    }
    if (!finite) {
      ++res.rejected;
      h *= 0.25;
      continue;
    }

    if (err <= 1.0) {
      t += h;
      y = y_new;
      k1 = k7;
      ++res.accepted;
      double fac = std::pow(err, expo) * std::pow(err_prev, -beta) / safety;
      fac = std::clamp(1.0 / std::max(fac, 1e-10), fac_min, fac_max);
      err_prev = std::max(err, 1e-4);
      h *= fac;
      if (!observe(t, y)) {
        res.status = OdeStatus::stopped;
        break;
      }
    } else {
      ++res.rejected;
      h *= std::max(fac_min, safety * std::pow(err, -0.2));
    }
  }
  res.t = t;
  res.y = y;
  return res;
}

}  // namespace beltrami
