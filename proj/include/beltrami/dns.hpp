#pragma once

// Pseudo-spectral integrator for the force-free Navier-Stokes equations in a periodic box,
// written for the velocity (u_t = P[u x omega] + Lap u / R, P the Leray projection), which is
// the curl-free preimage of the vorticity equation
//     omega_t + rot(omega x u) = Lap omega / R.
// Low-storage RK3 with an exact integrating factor for viscosity and 2/3 dealiasing.
// Each axis may have its own period so that slow modulations fit in the box.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "beltrami/error.hpp"
#include "beltrami/fft.hpp"
#include "beltrami/vec.hpp"
#include "beltrami/vorticity.hpp"

namespace beltrami {

using BoxLengths = std::array<double, 3>;

inline constexpr BoxLengths unit_box{two_pi, two_pi, two_pi};

/// Half-spectrum coefficients of a real periodic velocity, unnormalized r2c convention.
struct SpectralField3D {
  std::size_t n = 0;
  BoxLengths L = unit_box;
  double R = 1.0;
  double t = 0.0;
  std::array<std::vector<cplx>, 3> u_hat;

  std::size_t half() const { return n / 2 + 1; }
  std::size_t spectral_size() const { return half() * n * n; }
  std::size_t real_size() const { return n * n * n; }
  double dx(int axis) const { return L[axis] / static_cast<double>(n); }
};

namespace detail {

inline void check_grid(std::size_t n) {
  if (n < 8 || (n & (n - 1)) != 0) throw Error(ErrorKind::invalid_resolution, "grid size must be a power of two >= 8");
}

/// Wavevector of half-spectrum bin s.
inline Vec3 wavevector(const SpectralField3D& f, std::size_t s) {
  const std::size_t nh = f.half();
  const std::size_t kx = s % nh, rest = s / nh, ky = rest % f.n, kz = rest / f.n;
  return {two_pi / f.L[0] * static_cast<double>(kx), two_pi / f.L[1] * wavenumber(ky, f.n),
          two_pi / f.L[2] * wavenumber(kz, f.n)};
}

/// Integer indices, for dealiasing.
inline std::array<int, 3> mode_index(const SpectralField3D& f, std::size_t s) {
  const std::size_t nh = f.half();
  const std::size_t kx = s % nh, rest = s / nh, ky = rest % f.n, kz = rest / f.n;
  return {static_cast<int>(kx), wavenumber(ky, f.n), wavenumber(kz, f.n)};
}

inline bool retained(const std::array<int, 3>& m, std::size_t n) {
  const int cut = static_cast<int>(n) / 3;
  return std::abs(m[0]) <= cut && std::abs(m[1]) <= cut && std::abs(m[2]) <= cut;
}

/// Weight of a half-spectrum bin in a full-spectrum sum (conjugate partner counted).
inline double hermitian_weight(const SpectralField3D& f, std::size_t s) {
  const std::size_t kx = s % f.half();
  return (kx == 0 || 2 * kx == f.n) ? 1.0 : 2.0;
}

}  // namespace detail

/// Samples a velocity on the grid (x fastest) and transforms it.
inline SpectralField3D make_field(std::size_t n, const BoxLengths& L, double R, double t,
                                  const std::function<Vec3(double, double, double)>& u) {
  detail::check_grid(n);
  SpectralField3D f;
  f.n = n;
  f.L = L;
  f.R = R;
  f.t = t;
  Fft3D fft(n);
  for (int c = 0; c < 3; ++c) {
    auto real = fft.real();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3 v = u(L[0] * i / n, L[1] * j / n, L[2] * k / n);
          real[i + n * (j + n * k)] = c == 0 ? v.x : c == 1 ? v.y : v.z;
        }
    fft.forward();
    f.u_hat[c].assign(fft.spectrum().begin(), fft.spectrum().end());
  }
  return f;
}

/// Real-space components, x fastest.
inline std::array<std::vector<double>, 3> to_real(const SpectralField3D& f) {
  Fft3D fft(f.n);
  std::array<std::vector<double>, 3> out;
  const double norm_fac = 1.0 / static_cast<double>(f.real_size());
  for (int c = 0; c < 3; ++c) {
    std::copy(f.u_hat[c].begin(), f.u_hat[c].end(), fft.spectrum().begin());
    fft.backward();
    out[c].resize(f.real_size());
    for (std::size_t i = 0; i < f.real_size(); ++i) out[c][i] = fft.real()[i] * norm_fac;
  }
  return out;
}

/// Mean kinetic energy (1/2) <|u|^2> over the box.
inline double energy(const SpectralField3D& f) {
  const double N = static_cast<double>(f.real_size());
  double e = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < f.spectral_size(); ++s) e += detail::hermitian_weight(f, s) * std::norm(f.u_hat[c][s]);
  return 0.5 * e / (N * N);
}

/// max |k . u_hat| relative to max |k| |u_hat|.
inline double divergence_defect(const SpectralField3D& f) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t s = 0; s < f.spectral_size(); ++s) {
    const Vec3 k = detail::wavevector(f, s);
    const cplx d = k.x * f.u_hat[0][s] + k.y * f.u_hat[1][s] + k.z * f.u_hat[2][s];
    worst = std::max(worst, std::abs(d));
    scale = std::max(scale, norm(k) * std::hypot(std::abs(f.u_hat[0][s]), std::abs(f.u_hat[1][s]), std::abs(f.u_hat[2][s])));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

/// Leray projection in place.
inline void project(SpectralField3D& f) {
  for (std::size_t s = 0; s < f.spectral_size(); ++s) {
    const Vec3 k = detail::wavevector(f, s);
    const double k2 = dot(k, k);
    if (k2 == 0.0) continue;
    const cplx d = (k.x * f.u_hat[0][s] + k.y * f.u_hat[1][s] + k.z * f.u_hat[2][s]) / k2;
    f.u_hat[0][s] -= k.x * d;
    f.u_hat[1][s] -= k.y * d;
    f.u_hat[2][s] -= k.z * d;
  }
}

struct DnsOptions {
  double cfl_limit = 1.0;
  bool dealias = true;
};

class DnsSolver {
 public:
  explicit DnsSolver(std::size_t n, DnsOptions opt = {}) : n_(n), opt_(opt), fft_(n) { detail::check_grid(n); }

  /// Projected, dealiased u x omega in spectral space; also reports max advective rate.
  std::array<std::vector<cplx>, 3> nonlinear(const SpectralField3D& f, double* rate = nullptr) {
    const std::size_t S = f.spectral_size(), N = f.real_size();
    std::array<std::vector<double>, 3> u, w;
    std::vector<cplx> tmp(S);
    auto inverse = [&](const std::vector<cplx>& spec, std::vector<double>& out) {
      std::copy(spec.begin(), spec.end(), fft_.spectrum().begin());
      fft_.backward();
      out.assign(fft_.real().begin(), fft_.real().end());
      for (auto& v : out) v /= static_cast<double>(N);
    };
    for (int c = 0; c < 3; ++c) inverse(f.u_hat[c], u[c]);
    const cplx I(0, 1);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t s = 0; s < S; ++s) {
        const Vec3 k = detail::wavevector(f, s);
        // (i k x u_hat)_c
        tmp[s] = c == 0 ? I * (k.y * f.u_hat[2][s] - k.z * f.u_hat[1][s])
                 : c == 1 ? I * (k.z * f.u_hat[0][s] - k.x * f.u_hat[2][s])
                          : I * (k.x * f.u_hat[1][s] - k.y * f.u_hat[0][s]);
      }
      inverse(tmp, w[c]);
    }
    if (rate) {
      double r = 0.0;
      for (std::size_t i = 0; i < N; ++i)
        r = std::max(r, std::abs(u[0][i]) / f.dx(0) + std::abs(u[1][i]) / f.dx(1) + std::abs(u[2][i]) / f.dx(2));
      *rate = r;
    }
    std::array<std::vector<cplx>, 3> out;
    for (int c = 0; c < 3; ++c) {
      auto real = fft_.real();
      const int a = (c + 1) % 3, b = (c + 2) % 3;
      for (std::size_t i = 0; i < N; ++i) real[i] = u[a][i] * w[b][i] - u[b][i] * w[a][i];
      fft_.forward();
      out[c].assign(fft_.spectrum().begin(), fft_.spectrum().end());
    }
    SpectralField3D view;
    view.n = f.n;
    view.L = f.L;
    view.u_hat = std::move(out);
    if (opt_.dealias)
      for (std::size_t s = 0; s < S; ++s)
        if (!detail::retained(detail::mode_index(f, s), f.n))
          for (int c = 0; c < 3; ++c) view.u_hat[c][s] = 0.0;
    project(view);
    return std::move(view.u_hat);
  }

  /// Advective CFL rate max(|u_x|/dx + |u_y|/dy + |u_z|/dz) for the current field.
  double cfl_rate(const SpectralField3D& f) {
    double r = 0.0;
    nonlinear(f, &r);
    return r;
  }

  /// One step of Williamson's low-storage RK3 on v = e^{|k|^2 (t - t_n)/R} u_hat.
  void step(SpectralField3D& f, double dt) {
    static constexpr double A[3] = {0.0, -5.0 / 9.0, -153.0 / 128.0};
    static constexpr double B[3] = {1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0};
    static constexpr double C[3] = {0.0, 1.0 / 3.0, 3.0 / 4.0};
    if (!(dt > 0.0)) throw Error(ErrorKind::invalid_argument, "dt must be positive");
    const std::size_t S = f.spectral_size();
    std::vector<double> k2(S);
    for (std::size_t s = 0; s < S; ++s) {
      const Vec3 k = detail::wavevector(f, s);
      k2[s] = dot(k, k);
    }
    SpectralField3D v = f;
    std::array<std::vector<cplx>, 3> q;
    for (auto& qc : q) qc.assign(S, cplx{});
    SpectralField3D stage = f;
    for (int i = 0; i < 3; ++i) {
      const double tc = C[i] * dt;
      for (int c = 0; c < 3; ++c)
        for (std::size_t s = 0; s < S; ++s) stage.u_hat[c][s] = std::exp(-k2[s] * tc / f.R) * v.u_hat[c][s];
      double rate = 0.0;
      auto N = nonlinear(stage, i == 0 ? &rate : nullptr);
      if (i == 0 && rate * dt > opt_.cfl_limit)
        throw CflError(opt_.cfl_limit / rate, "advective CFL bound violated");
      for (int c = 0; c < 3; ++c)
        for (std::size_t s = 0; s < S; ++s) {
          q[c][s] = A[i] * q[c][s] + dt * std::exp(k2[s] * tc / f.R) * N[c][s];
          v.u_hat[c][s] += B[i] * q[c][s];
        }
    }
    for (int c = 0; c < 3; ++c)
      for (std::size_t s = 0; s < S; ++s) f.u_hat[c][s] = std::exp(-k2[s] * dt / f.R) * v.u_hat[c][s];
    f.t += dt;
  }

 private:
  std::size_t n_;
  DnsOptions opt_;
  Fft3D fft_;
};

inline SpectralField3D dns_step(const SpectralField3D& s, double dt) {
  SpectralField3D out = s;
  DnsSolver(s.n).step(out, dt);
  return out;
}

// ---- initial data -------------------------------------------------------------------------

/// Trkal flow amplitude * e1(z) = amplitude (sin z, cos z, 0).
inline SpectralField3D trkal_field(std::size_t n, double R, double amplitude = 1.0) {
  return make_field(n, unit_box, R, 0.0, [&](double, double, double z) {
    return Vec3{amplitude * std::sin(z), amplitude * std::cos(z), 0.0};
  });
}

/// Constant-coefficient triplet gamma0 e1 + gamma1 h1 + delta z^.
inline SpectralField3D triplet_field(std::size_t n, double R, double g0, double g1, double delta) {
  return make_field(n, unit_box, R, 0.0, [&](double, double, double z) {
    return Vec3{g0 * std::sin(z) + g1 * std::cos(z), g0 * std::cos(z) - g1 * std::sin(z), delta};
  });
}

/// Box holding one slow period: 2pi/eps along x and y, 2pi along z.
inline BoxLengths slow_box(double eps) { return {two_pi / eps, two_pi / eps, two_pi}; }

/// Composed asymptotic field u0 + eps u1 at physical (x, y, z, t), with slow variables
/// xi = eps x, eta = eps y, tau = eps t and the Trkal decay e^{-t/R}.
inline Vec3 composed_physical(const AsymptoticVelocity& V, double x, double y, double z, double t,
                              bool viscous_decay = true) {
  const double eps = V.frame.eps;
  const Vec3 u = composed_velocity(V, eps * x, eps * y, z, eps * t);
  return viscous_decay ? std::exp(-t / V.frame.R) * u : u;
}

// ---- residual -------------------------------------------------------------------------------

struct CandidateSample {
  Vec3 u, u_t;
};
using Candidate = std::function<CandidateSample(double x, double y, double z, double t)>;

/// ||omega_t + rot(omega x u) - Lap omega / R||_2 / ||omega||_2 for an analytic candidate
/// sampled on the grid of `grid` at time t; all derivatives spectral.
inline double residual_of(const SpectralField3D& grid, const Candidate& cand, double t) {
  const std::size_t n = grid.n;
  detail::check_grid(n);
  const auto& L = grid.L;
  std::vector<CandidateSample> samples(grid.real_size());
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        samples[i + n * (j + n * k)] = cand(L[0] * i / n, L[1] * j / n, L[2] * k / n, t);
  auto transform = [&](auto pick) {
    return make_field(n, L, grid.R, t, [&](double x, double y, double z) {
      const std::size_t i = static_cast<std::size_t>(std::lround(x / L[0] * n)) % n;
      const std::size_t j = static_cast<std::size_t>(std::lround(y / L[1] * n)) % n;
      const std::size_t k = static_cast<std::size_t>(std::lround(z / L[2] * n)) % n;
      return pick(samples[i + n * (j + n * k)]);
    });
  };
  SpectralField3D u = transform([](const CandidateSample& s) { return s.u; });
  SpectralField3D ut = transform([](const CandidateSample& s) { return s.u_t; });
  const std::size_t S = u.spectral_size();
  const cplx I(0, 1);
  auto curl = [&](const SpectralField3D& f) {
    SpectralField3D w = f;
    for (std::size_t s = 0; s < S; ++s) {
      const Vec3 k = detail::wavevector(f, s);
      w.u_hat[0][s] = I * (k.y * f.u_hat[2][s] - k.z * f.u_hat[1][s]);
      w.u_hat[1][s] = I * (k.z * f.u_hat[0][s] - k.x * f.u_hat[2][s]);
      w.u_hat[2][s] = I * (k.x * f.u_hat[1][s] - k.y * f.u_hat[0][s]);
    }
    return w;
  };
  const SpectralField3D w = curl(u), wt = curl(ut);
  // omega x u in real space, no dealiasing: the candidate is evaluated exactly on the grid
  const auto ur = to_real(u), wr = to_real(w);
  SpectralField3D cross_f = make_field(n, L, grid.R, t, [&](double x, double y, double z) {
    const std::size_t i = static_cast<std::size_t>(std::lround(x / L[0] * n)) % n;
    const std::size_t j = static_cast<std::size_t>(std::lround(y / L[1] * n)) % n;
    const std::size_t k = static_cast<std::size_t>(std::lround(z / L[2] * n)) % n;
    const std::size_t p = i + n * (j + n * k);
    const Vec3 a{wr[0][p], wr[1][p], wr[2][p]}, b{ur[0][p], ur[1][p], ur[2][p]};
    return cross(a, b);
  });
  const SpectralField3D rc = curl(cross_f);
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const Vec3 k = detail::wavevector(u, s);
    const double k2 = dot(k, k), wgt = detail::hermitian_weight(u, s);
    for (int c = 0; c < 3; ++c) {
      const cplx r = wt.u_hat[c][s] + rc.u_hat[c][s] + k2 / grid.R * w.u_hat[c][s];
      num += wgt * std::norm(r);
      den += wgt * std::norm(w.u_hat[c][s]);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Candidate from a velocity function; u_t by a fourth-order central difference in t.
inline Candidate candidate_from(std::function<Vec3(double, double, double, double)> u, double h = 1e-3) {
  return [u = std::move(u), h](double x, double y, double z, double t) {
    const Vec3 a = u(x, y, z, t - 2 * h), b = u(x, y, z, t - h), c = u(x, y, z, t + h), d = u(x, y, z, t + 2 * h);
    return CandidateSample{u(x, y, z, t), (1.0 / (12 * h)) * (a - 8.0 * b + 8.0 * c - d)};
  };
}

// ---- short-time comparison ------------------------------------------------------------------

struct ShortTimeReport {
  std::vector<double> times;
  std::vector<double> errors;  // RMS |u_dns - u_asym| over the grid
  double initial_error = 0.0;
  double max_error = 0.0;
};

inline double rms_difference(const SpectralField3D& f, const std::function<Vec3(double, double, double)>& u) {
  const auto r = to_real(f);
  const std::size_t n = f.n;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = i + n * (j + n * k);
        const Vec3 v = u(f.L[0] * i / n, f.L[1] * j / n, f.L[2] * k / n);
        const Vec3 d = Vec3{r[0][p], r[1][p], r[2][p]} - v;
        acc += dot(d, d);
      }
  return std::sqrt(acc / static_cast<double>(f.real_size()));
}

/// Runs the DNS from s0 and compares with the composed field at `samples` evenly spaced times.
inline ShortTimeReport compare_short_time(const AsymptoticVelocity& V, const SpectralField3D& s0, double t_end,
                                          double dt, int samples = 10) {
  if (t_end > 0.1 * std::sqrt(V.frame.R) + 1e-12)
    throw Error(ErrorKind::setup, "t_end beyond the short-time window 0.1 sqrt(R)");
  if (samples < 1) throw Error(ErrorKind::invalid_argument, "need at least one sample");
  ShortTimeReport rep;
  SpectralField3D f = s0;
  DnsSolver solver(f.n);
  auto asym = [&](double t) {
    return [&V, t](double x, double y, double z) { return composed_physical(V, x, y, z, t); };
  };
  rep.initial_error = rms_difference(f, asym(f.t));
  const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / steps;
  long next = 1;
  for (long k = 1; k <= steps; ++k) {
    solver.step(f, h);
    if (k * samples >= next * steps) {
      rep.times.push_back(f.t);
      rep.errors.push_back(rms_difference(f, asym(f.t)));
      rep.max_error = std::max(rep.max_error, rep.errors.back());
      ++next;
    }
  }
  return rep;
}

// ---- snapshots ------------------------------------------------------------------------------

inline constexpr char snapshot_magic[8] = {'B', 'T', 'D', 'N', 'S', '1', '\0', '\0'};

inline void write_snapshot(const std::string& path, const SpectralField3D& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::format, "cannot open " + path);
  const std::uint64_t n = f.n;
  out.write(snapshot_magic, 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&f.R), 8);
  out.write(reinterpret_cast<const char*>(&f.t), 8);
  for (const auto& c : to_real(f)) out.write(reinterpret_cast<const char*>(c.data()), c.size() * sizeof(double));
  if (!out) throw Error(ErrorKind::format, "write failed for " + path);
}

/// Box lengths are not stored in the snapshot; they come from the accompanying manifest.
inline SpectralField3D read_snapshot(const std::string& path, const BoxLengths& L = unit_box) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::format, "cannot open " + path);
  char magic[8];
  std::uint64_t n = 0;
  double R = 0.0, t = 0.0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, snapshot_magic, 8) != 0) throw Error(ErrorKind::format, "bad snapshot magic");
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&R), 8);
  in.read(reinterpret_cast<char*>(&t), 8);
  detail::check_grid(n);
  std::array<std::vector<double>, 3> comp;
  for (auto& c : comp) {
    c.resize(n * n * n);
    in.read(reinterpret_cast<char*>(c.data()), c.size() * sizeof(double));
  }
  if (!in) throw Error(ErrorKind::format, "truncated snapshot");
  return make_field(n, L, R, t, [&](double x, double y, double z) {
    const std::size_t i = static_cast<std::size_t>(std::lround(x / L[0] * n)) % n;
    const std::size_t j = static_cast<std::size_t>(std::lround(y / L[1] * n)) % n;
    const std::size_t k = static_cast<std::size_t>(std::lround(z / L[2] * n)) % n;
    const std::size_t p = i + n * (j + n * k);
    return Vec3{comp[0][p], comp[1][p], comp[2][p]};
  });
}

}  // namespace beltrami
