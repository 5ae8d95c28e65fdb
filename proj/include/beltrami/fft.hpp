#pragma once

// Thin RAII wrappers over FFTW3. Transforms are unnormalized, like FFTW itself;
// callers divide by the point count after a forward transform.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <utility>

#include "beltrami/error.hpp"

namespace beltrami {

using cplx = std::complex<double>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (p_ == nullptr) throw std::bad_alloc();
    for (std::size_t i = 0; i < n_; ++i) p_[i] = T{};
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  ~FftwBuffer() { fftw_free(p_); }

  T* data() { return p_; }
  const T* data() const { return p_; }
  std::size_t size() const { return n_; }
  std::span<T> span() { return {p_, n_}; }

 private:
  std::size_t n_;
  T* p_;
};

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : p_(p) {
    if (p_ == nullptr) throw Error(ErrorKind::setup, "FFTW planner returned null");
  }
  Plan(Plan&& o) noexcept : p_(std::exchange(o.p_, nullptr)) {}
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      p_ = std::exchange(o.p_, nullptr);
    }
    return *this;
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() { reset(); }

  void execute() const { fftw_execute(p_); }

 private:
  void reset() {
    if (p_ != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(p_);
      p_ = nullptr;
    }
  }
  fftw_plan p_ = nullptr;
};

}  // namespace detail

/// Signed integer wavenumber of FFT bin `i` for a transform of length `n`.
constexpr int wavenumber(std::size_t i, std::size_t n) {
  return static_cast<int>(i) <= static_cast<int>(n / 2) ? static_cast<int>(i)
                                                          : static_cast<int>(i) - static_cast<int>(n);
}

/// Complex 1-D transform of fixed length with an owned work buffer.
class Fft1D {
 public:
  explicit Fft1D(std::size_t n) : n_(n), buf_(n) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fwd_ = detail::Plan(fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE));
    bwd_ = detail::Plan(fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  std::size_t size() const { return n_; }
  std::span<cplx> data() { return buf_.span(); }
  void forward() { fwd_.execute(); }
  void backward() { bwd_.execute(); }

 private:
  std::size_t n_;
  detail::FftwBuffer<cplx> buf_;
  detail::Plan fwd_, bwd_;
};

/// Complex n x n transform. Storage index is i + n*j with i along the first (xi) axis.
class Fft2D {
 public:
  explicit Fft2D(std::size_t n) : n_(n), buf_(n * n) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    const int ni = static_cast<int>(n);
    fwd_ = detail::Plan(fftw_plan_dft_2d(ni, ni, p, p, FFTW_FORWARD, FFTW_ESTIMATE));
    bwd_ = detail::Plan(fftw_plan_dft_2d(ni, ni, p, p, FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  std::size_t size() const { return n_; }
  std::span<cplx> data() { return buf_.span(); }
  cplx& at(std::size_t i, std::size_t j) { return buf_.data()[i + n_ * j]; }
  void forward() { fwd_.execute(); }
  void backward() { bwd_.execute(); }

 private:
  std::size_t n_;
  detail::FftwBuffer<cplx> buf_;
  detail::Plan fwd_, bwd_;
};

/// Real-to-complex 3-D transform on an n^3 grid, x fastest (index i + n*(j + n*k)).
/// The half spectrum has (n/2+1) x-bins: index kx + (n/2+1)*(ky + n*kz).
class Fft3D {
 public:
  explicit Fft3D(std::size_t n) : n_(n), nh_(n / 2 + 1), real_(n * n * n), spec_(nh_ * n * n) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int ni = static_cast<int>(n);
    auto* s = reinterpret_cast<fftw_complex*>(spec_.data());
    r2c_ = detail::Plan(fftw_plan_dft_r2c_3d(ni, ni, ni, real_.data(), s, FFTW_ESTIMATE));
    c2r_ = detail::Plan(fftw_plan_dft_c2r_3d(ni, ni, ni, s, real_.data(), FFTW_ESTIMATE));
  }
  std::size_t size() const { return n_; }
  std::size_t half() const { return nh_; }
  std::span<double> real() { return real_.span(); }
  std::span<cplx> spectrum() { return spec_.span(); }
  /// real() -> spectrum()
  void forward() { r2c_.execute(); }
  /// spectrum() -> real(); destroys the spectrum buffer contents.
  void backward() { c2r_.execute(); }

 private:
  std::size_t n_, nh_;
  detail::FftwBuffer<double> real_;
  detail::FftwBuffer<cplx> spec_;
  detail::Plan r2c_, c2r_;
};

}  // namespace beltrami
