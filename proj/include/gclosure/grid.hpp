#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gclosure/errors.hpp"
#include "gclosure/exact_sum.hpp"
#include "gclosure/matrix.hpp"

namespace gclosure {

/// Periodic pixel grid on the cell (0,j)^2 with N pixels per unit length.
///
/// Node (i0, i1) sits at y = (i0, i1) / N; axis 0 is y_1, axis 1 is y_2.
/// Storage is row-major in (i0, i1) and every index wraps modulo j*N.
class PeriodicGrid {
 public:
  static constexpr int n = 2;

  PeriodicGrid() = default;
  PeriodicGrid(int N, int j = 1) : N_(N), j_(j) {
    if (N < 1 || j < 1 || N * j < 2)
      throw DimensionMismatch("grid needs N >= 1, j >= 1 and jN >= 2");
  }

  int N() const { return N_; }
  int j() const { return j_; }
  /// Points per axis.
  int side() const { return N_ * j_; }
  std::size_t size() const {
    return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
  }
  double spacing() const { return 1.0 / N_; }

  static int wrap(int i, int m) {
    const int r = i % m;
    return r < 0 ? r + m : r;
  }
  std::size_t index(int i0, int i1) const {
    const int m = side();
    return static_cast<std::size_t>(wrap(i0, m)) * static_cast<std::size_t>(m) +
           static_cast<std::size_t>(wrap(i1, m));
  }
  int row(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(side())); }
  int col(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(side())); }
  /// Neighbour index one step forward along `axis`.
  std::size_t forward(std::size_t idx, int axis) const {
    const int i0 = row(idx), i1 = col(idx);
    return axis == 0 ? index(i0 + 1, i1) : index(i0, i1 + 1);
  }
  std::size_t backward(std::size_t idx, int axis) const {
    const int i0 = row(idx), i1 = col(idx);
    return axis == 0 ? index(i0 - 1, i1) : index(i0, i1 - 1);
  }
  PeriodicGrid multiple(int factor) const { return PeriodicGrid(N_, j_ * factor); }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

 private:
  int N_ = 2;
  int j_ = 1;
};

/// m-component field on a periodic grid, component-major storage.
class VectorField {
 public:
  VectorField() = default;
  VectorField(PeriodicGrid grid, int m)
      : grid_(grid), m_(m), values_(static_cast<std::size_t>(m) * grid.size(), 0.0) {
    if (m < 1 || m > 2) throw DimensionMismatch("target dimension must be 1 or 2");
  }

  const PeriodicGrid& grid() const { return grid_; }
  int m() const { return m_; }
  std::size_t size() const { return grid_.size(); }

  double& at(int comp, std::size_t idx) { return values_[comp * grid_.size() + idx]; }
  double at(int comp, std::size_t idx) const { return values_[comp * grid_.size() + idx]; }
  std::span<double> component(int comp) {
    return {values_.data() + comp * grid_.size(), grid_.size()};
  }
  std::span<const double> component(int comp) const {
    return {values_.data() + comp * grid_.size(), grid_.size()};
  }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  /// Subtract the mean of every component.
  void remove_mean() {
    for (int c = 0; c < m_; ++c) {
      auto comp = component(c);
      const double mean = exact_sum(comp) / static_cast<double>(comp.size());
      for (double& x : comp) x -= mean;
    }
  }

 private:
  PeriodicGrid grid_;
  int m_ = 1;
  std::vector<double> values_;
};

/// m x 2 matrix per grid point, stored as m*2 planes ((comp, axis) major).
class GradientField {
 public:
  GradientField() = default;
  GradientField(PeriodicGrid grid, int m)
      : grid_(grid), m_(m), values_(static_cast<std::size_t>(2 * m) * grid.size(), 0.0) {
    if (m < 1 || m > 2) throw DimensionMismatch("target dimension must be 1 or 2");
  }

  const PeriodicGrid& grid() const { return grid_; }
  int m() const { return m_; }
  std::size_t size() const { return grid_.size(); }

  double& at(int comp, int axis, std::size_t idx) {
    return values_[(comp * 2 + axis) * grid_.size() + idx];
  }
  double at(int comp, int axis, std::size_t idx) const {
    return values_[(comp * 2 + axis) * grid_.size() + idx];
  }
  std::span<const double> plane(int comp, int axis) const {
    return {values_.data() + (comp * 2 + axis) * grid_.size(), grid_.size()};
  }

  Matrix matrix(std::size_t idx) const {
    Matrix out(m_, 2);
    for (int c = 0; c < m_; ++c)
      for (int a = 0; a < 2; ++a) out(c, a) = at(c, a, idx);
    return out;
  }
  void set_matrix(std::size_t idx, const Matrix& value) {
    for (int c = 0; c < m_; ++c)
      for (int a = 0; a < 2; ++a) at(c, a, idx) = value(c, a);
  }

 private:
  PeriodicGrid grid_;
  int m_ = 1;
  std::vector<double> values_;
};

/// Forward differences with periodic wrap: (d_a f)(i) = (f(i + e_a) - f(i)) * N.
inline GradientField gradient(const VectorField& f) {
  const auto& g = f.grid();
  GradientField out(g, f.m());
  const int side = g.side();
  const double inv_h = static_cast<double>(g.N());
  for (int c = 0; c < f.m(); ++c) {
    const auto u = f.component(c);
    for (int i0 = 0; i0 < side; ++i0) {
      const std::size_t row = static_cast<std::size_t>(i0) * side;
      const std::size_t next_row = static_cast<std::size_t>((i0 + 1) % side) * side;
      for (int i1 = 0; i1 < side; ++i1) {
        const std::size_t idx = row + i1;
        const double here = u[idx];
        out.at(c, 0, idx) = (u[next_row + i1] - here) * inv_h;
        out.at(c, 1, idx) = (u[row + (i1 + 1 == side ? 0 : i1 + 1)] - here) * inv_h;
      }
    }
  }
  return out;
}

/// xi + grad(f) at every pixel.
inline GradientField affine_gradient(const Matrix& xi, const VectorField& f) {
  if (xi.rows != f.m() || xi.cols != 2)
    throw DimensionMismatch("macroscopic matrix does not match field dimension");
  GradientField out = gradient(f);
  for (std::size_t idx = 0; idx < out.size(); ++idx)
    for (int c = 0; c < f.m(); ++c)
      for (int a = 0; a < 2; ++a) out.at(c, a, idx) += xi(c, a);
  return out;
}

/// Adjoint of the forward-difference gradient applied to one component's
/// flux planes: out(i) = sum_a (s_a(i - e_a) - s_a(i)) * N.
inline void gradient_adjoint(const PeriodicGrid& g, std::span<const double> s0,
                             std::span<const double> s1, std::span<double> out) {
  const int side = g.side();
  const double inv_h = static_cast<double>(g.N());
  for (int i0 = 0; i0 < side; ++i0) {
    const std::size_t row = static_cast<std::size_t>(i0) * side;
    const std::size_t prev_row = static_cast<std::size_t>((i0 + side - 1) % side) * side;
    for (int i1 = 0; i1 < side; ++i1) {
      const std::size_t idx = row + i1;
      const std::size_t left = row + (i1 == 0 ? side - 1 : i1 - 1);
      out[idx] = (s0[prev_row + i1] - s0[idx] + s1[left] - s1[idx]) * inv_h;
    }
  }
}

inline double cell_average(std::span<const double> scalar) {
  return exact_sum(scalar) / static_cast<double>(scalar.size());
}

inline Matrix cell_average(const GradientField& g) {
  Matrix out(g.m(), 2);
  for (int c = 0; c < g.m(); ++c)
    for (int a = 0; a < 2; ++a) out(c, a) = cell_average(g.plane(c, a));
  return out;
}

/// Copy a field onto the grid tiled `factor` times along each axis.
inline VectorField tile(const VectorField& f, int factor) {
  const auto& g = f.grid();
  VectorField out(g.multiple(factor), f.m());
  const auto& big = out.grid();
  for (int c = 0; c < f.m(); ++c)
    for (int i0 = 0; i0 < big.side(); ++i0)
      for (int i1 = 0; i1 < big.side(); ++i1)
        out.at(c, big.index(i0, i1)) = f.at(c, g.index(i0, i1));
  return out;
}

/// CSV snapshot with header `i,j,comp,value`.
inline void write_field_csv(std::ostream& os, const VectorField& f) {
  os << "i,j,comp,value\n";
  const auto& g = f.grid();
  const auto old_prec = os.precision(17);
  for (int c = 0; c < f.m(); ++c)
    for (int i0 = 0; i0 < g.side(); ++i0)
      for (int i1 = 0; i1 < g.side(); ++i1)
        os << i0 << ',' << i1 << ',' << c << ',' << f.at(c, g.index(i0, i1)) << '\n';
  os.precision(old_prec);
}

inline void write_field_csv(std::ostream& os, const GradientField& f) {
  os << "i,j,comp,value\n";
  const auto& g = f.grid();
  const auto old_prec = os.precision(17);
  for (int c = 0; c < f.m(); ++c)
    for (int a = 0; a < 2; ++a)
      for (int i0 = 0; i0 < g.side(); ++i0)
        for (int i1 = 0; i1 < g.side(); ++i1)
          os << i0 << ',' << i1 << ',' << (c * 2 + a) << ','
             << f.at(c, a, g.index(i0, i1)) << '\n';
  os.precision(old_prec);
}

}  // namespace gclosure
