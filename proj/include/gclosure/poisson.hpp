#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "gclosure/grid.hpp"

namespace gclosure {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Inverse of the forward-difference Laplacian D^T D on a periodic grid,
/// diagonal in Fourier space; the constant mode is mapped to zero.
class PeriodicPoisson {
 public:
  explicit PeriodicPoisson(const PeriodicGrid& grid) : grid_(grid) {
    const int m = grid.side();
    const int half = m / 2 + 1;
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * grid.size()));
    spec_ = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(m) * half));
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_2d(m, m, real_, spec_, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_2d(m, m, spec_, real_, FFTW_ESTIMATE);
    }
    symbol_.resize(static_cast<std::size_t>(m) * half);
    const double n2 = static_cast<double>(grid.N()) * grid.N();
    const double norm = 1.0 / static_cast<double>(grid.size());
    for (int k0 = 0; k0 < m; ++k0) {
      const double s0 = std::sin(std::numbers::pi * k0 / m);
      for (int k1 = 0; k1 < half; ++k1) {
        const double s1 = std::sin(std::numbers::pi * k1 / m);
        const double lam = 4.0 * n2 * (s0 * s0 + s1 * s1);
        symbol_[static_cast<std::size_t>(k0) * half + k1] = lam > 0.0 ? norm / lam : 0.0;
      }
    }
  }

  PeriodicPoisson(const PeriodicPoisson&) = delete;
  PeriodicPoisson& operator=(const PeriodicPoisson&) = delete;

  ~PeriodicPoisson() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  const PeriodicGrid& grid() const { return grid_; }

  /// out = scale * (D^T D)^+ in; in and out may alias.
  void solve(std::span<const double> in, std::span<double> out, double scale = 1.0) {
    const std::size_t n = grid_.size();
    for (std::size_t i = 0; i < n; ++i) real_[i] = in[i];
    fftw_execute(forward_);
    for (std::size_t k = 0; k < symbol_.size(); ++k) {
      const double s = symbol_[k] * scale;
      spec_[k][0] *= s;
      spec_[k][1] *= s;
    }
    fftw_execute(backward_);
    for (std::size_t i = 0; i < n; ++i) out[i] = real_[i];
  }

 private:
  PeriodicGrid grid_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_{};
  fftw_plan backward_{};
  std::vector<double> symbol_;
};

}  // namespace gclosure
