#pragma once

#include <array>
#include <cmath>
#include <ostream>

#include "gclosure/errors.hpp"

namespace gclosure {

/// Small dense matrix with at most 2x2 entries, stored row-major.
///
/// The spatial dimension is fixed to n = 2; rows is the target dimension
/// m in {1, 2}. The scalar type is a template parameter so that the
/// laminate bookkeeping can run in exact rational arithmetic.
template <typename T>
struct BasicMatrix {
  int rows = 2;
  int cols = 2;
  std::array<T, 4> v{};

  BasicMatrix() = default;
  BasicMatrix(int r, int c) : rows(r), cols(c) {
    if (r < 1 || r > 2 || c < 1 || c > 2)
      throw DimensionMismatch("matrix dimensions must lie in {1,2}x{1,2}");
  }

  static BasicMatrix diag(T a, T b) {
    BasicMatrix m;
    m.v = {a, T(0), T(0), b};
    return m;
  }
  static BasicMatrix zero(int r = 2, int c = 2) { return BasicMatrix(r, c); }
  static BasicMatrix from_rows(int r, int c, const std::array<T, 4>& entries) {
    BasicMatrix m(r, c);
    m.v = entries;
    return m;
  }
  /// Outer product a (x) b of two 2-vectors.
  static BasicMatrix outer(const std::array<T, 2>& a,
                           const std::array<T, 2>& b) {
    BasicMatrix m;
    m.v = {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
    return m;
  }

  int size() const { return rows * cols; }
  T& operator()(int r, int c) { return v[r * cols + c]; }
  const T& operator()(int r, int c) const { return v[r * cols + c]; }
  T& operator[](int k) { return v[k]; }
  const T& operator[](int k) const { return v[k]; }

  bool same_shape(const BasicMatrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  BasicMatrix& operator+=(const BasicMatrix& o) {
    check_shape(o);
    for (int k = 0; k < size(); ++k) v[k] += o.v[k];
    return *this;
  }
  BasicMatrix& operator-=(const BasicMatrix& o) {
    check_shape(o);
    for (int k = 0; k < size(); ++k) v[k] -= o.v[k];
    return *this;
  }
  BasicMatrix& operator*=(const T& s) {
    for (int k = 0; k < size(); ++k) v[k] *= s;
    return *this;
  }
  friend BasicMatrix operator+(BasicMatrix a, const BasicMatrix& b) { return a += b; }
  friend BasicMatrix operator-(BasicMatrix a, const BasicMatrix& b) { return a -= b; }
  friend BasicMatrix operator*(BasicMatrix a, const T& s) { return a *= s; }
  friend BasicMatrix operator*(const T& s, BasicMatrix a) { return a *= s; }
  friend BasicMatrix operator-(BasicMatrix a) { return a *= T(-1); }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    if (!a.same_shape(b)) return false;
    for (int k = 0; k < a.size(); ++k)
      if (!(a.v[k] == b.v[k])) return false;
    return true;
  }

  void check_shape(const BasicMatrix& o) const {
    if (!same_shape(o)) throw DimensionMismatch("matrix shape mismatch");
  }
};

using Matrix = BasicMatrix<double>;

template <typename T>
T dot(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  a.check_shape(b);
  T s(0);
  for (int k = 0; k < a.size(); ++k) s += a.v[k] * b.v[k];
  return s;
}

template <typename T>
T norm2(const BasicMatrix<T>& a) {
  return dot(a, a);
}

inline double norm(const Matrix& a) { return std::sqrt(norm2(a)); }

template <typename T>
T det(const BasicMatrix<T>& a) {
  if (a.rows != 2 || a.cols != 2)
    throw DimensionMismatch("determinant needs a 2x2 matrix");
  return a.v[0] * a.v[3] - a.v[1] * a.v[2];
}

/// Derivative of det at a: the cofactor matrix.
template <typename T>
BasicMatrix<T> cofactor(const BasicMatrix<T>& a) {
  if (a.rows != 2 || a.cols != 2)
    throw DimensionMismatch("cofactor needs a 2x2 matrix");
  return BasicMatrix<T>::from_rows(2, 2, {a.v[3], -a.v[2], -a.v[1], a.v[0]});
}

inline bool is_finite(const Matrix& a) {
  for (int k = 0; k < a.size(); ++k)
    if (!std::isfinite(a.v[k])) return false;
  return true;
}

template <typename T>
std::ostream& operator<<(std::ostream& os, const BasicMatrix<T>& m) {
  os << '[';
  for (int r = 0; r < m.rows; ++r) {
    if (r) os << "; ";
    for (int c = 0; c < m.cols; ++c) {
      if (c) os << ", ";
      os << m(r, c);
    }
  }
  return os << ']';
}

/// Symmetric 2x2 eigenvalues (ascending).
inline std::array<double, 2> sym_eigenvalues(const Matrix& a) {
  const double tr = 0.5 * (a(0, 0) + a(1, 1));
  const double off = 0.5 * (a(0, 1) + a(1, 0));
  const double d = 0.5 * (a(0, 0) - a(1, 1));
  const double r = std::hypot(d, off);
  return {tr - r, tr + r};
}

inline Matrix inverse(const Matrix& a) {
  const double d = det(a);
  return Matrix::from_rows(2, 2, {a(1, 1) / d, -a(0, 1) / d, -a(1, 0) / d, a(0, 0) / d});
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionMismatch("matmul shape mismatch");
  Matrix out(a.rows, b.cols);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < b.cols; ++c) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a(r, k) * b(k, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace gclosure
