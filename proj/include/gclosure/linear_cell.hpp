#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gclosure/errors.hpp"
#include "gclosure/exact_sum.hpp"
#include "gclosure/grid.hpp"
#include "gclosure/microstructure.hpp"
#include "gclosure/poisson.hpp"

namespace gclosure {

/// Piecewise-constant conductivity A_chi(y) = A_{chi(y)} on a phase map.
///
/// Contrast (largest over smallest eigenvalue across phases) is capped at
/// 1e4; above that the fixed Laplacian preconditioner loses its grip and the
/// corrector accuracy degrades.
class ConductivityMixture {
 public:
  static constexpr double contrast_cap = 1e4;

  ConductivityMixture(std::vector<Matrix> tensors, PhaseMap chi)
      : tensors_(std::move(tensors)), chi_(std::move(chi)) {
    if (static_cast<int>(tensors_.size()) != chi_.phases())
      throw DimensionMismatch("one tensor per phase is required");
    lmin_ = std::numeric_limits<double>::infinity();
    lmax_ = 0.0;
    for (const auto& a : tensors_) {
      if (a.rows != 2 || a.cols != 2) throw DimensionMismatch("conductivities must be 2x2");
      if (std::fabs(a(0, 1) - a(1, 0)) > 1e-12) throw Error("conductivity is not symmetric");
      const auto ev = sym_eigenvalues(a);
      if (!(ev[0] > 0.0)) throw Error("conductivity is not positive-definite");
      lmin_ = std::min(lmin_, ev[0]);
      lmax_ = std::max(lmax_, ev[1]);
    }
    if (lmax_ / lmin_ > contrast_cap) throw Error("conductivity contrast exceeds 1e4");
  }

  const std::vector<Matrix>& tensors() const { return tensors_; }
  const PhaseMap& chi() const { return chi_; }
  const PeriodicGrid& grid() const { return chi_.grid(); }
  const Matrix& at(std::size_t pixel) const { return tensors_[chi_[pixel] - 1]; }
  std::array<double, 2> ellipticity() const { return {lmin_, lmax_}; }

 private:
  std::vector<Matrix> tensors_;
  PhaseMap chi_;
  double lmin_ = 0.0, lmax_ = 0.0;
};

struct CorrectorResult {
  VectorField phi;
  double residual = 0.0;
  int iterations = 0;
};

struct CgOptions {
  double tol = 1e-10;
  double stall_tol = 1e-8;
  int max_iters = 2000;
};

namespace detail {

/// out = D^T (A D u) for a scalar field u.
inline void apply_conductivity(const ConductivityMixture& M, std::span<const double> u,
                               std::vector<double>& f0, std::vector<double>& f1,
                               std::span<double> out) {
  const auto& g = M.grid();
  const int side = g.side();
  const double inv_h = g.N();
  for (int i0 = 0; i0 < side; ++i0) {
    const std::size_t row = static_cast<std::size_t>(i0) * side;
    const std::size_t next_row = static_cast<std::size_t>((i0 + 1) % side) * side;
    for (int i1 = 0; i1 < side; ++i1) {
      const std::size_t idx = row + i1;
      const std::size_t right = row + (i1 + 1 == side ? 0 : i1 + 1);
      const double d0 = (u[next_row + i1] - u[idx]) * inv_h;
      const double d1 = (u[right] - u[idx]) * inv_h;
      const Matrix& a = M.at(idx);
      f0[idx] = a(0, 0) * d0 + a(0, 1) * d1;
      f1[idx] = a(1, 0) * d0 + a(1, 1) * d1;
    }
  }
  gradient_adjoint(g, f0, f1, out);
}

}  // namespace detail

/// Mean-zero corrector phi_i of -div(A (e_i + grad phi)) = 0, by conjugate
/// gradients preconditioned with the constant-coefficient inverse Laplacian.
inline CorrectorResult solve_corrector(const ConductivityMixture& M, int axis,
                                       const CgOptions& opts = {}) {
  if (axis != 0 && axis != 1) throw DimensionMismatch("axis must be 0 or 1");
  const auto& g = M.grid();
  const std::size_t P = g.size();
  std::vector<double> f0(P), f1(P), b(P), r(P), z(P), p(P), q(P);
  for (std::size_t idx = 0; idx < P; ++idx) {
    const Matrix& a = M.at(idx);
    f0[idx] = -a(0, axis);
    f1[idx] = -a(1, axis);
  }
  gradient_adjoint(g, f0, f1, b);

  CorrectorResult out{VectorField(g, 1), 0.0, 0};
  auto x = out.phi.component(0);
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  if (bnorm == 0.0) return out;

  std::vector<std::size_t> counts = M.chi().counts();
  double aref = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto& t = M.tensors()[k];
    aref += 0.5 * (t(0, 0) + t(1, 1)) * static_cast<double>(counts[k]) / static_cast<double>(P);
  }
  PeriodicPoisson poisson(g);

  r = b;
  poisson.solve(r, z, 1.0 / aref);
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < P; ++i) rz += r[i] * z[i];
  double rel = 1.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    detail::apply_conductivity(M, p, f0, f1, q);
    double pq = 0.0;
    for (std::size_t i = 0; i < P; ++i) pq += p[i] * q[i];
    const double alpha = rz / pq;
    double rr = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rr += r[i] * r[i];
    }
    rel = std::sqrt(rr) / bnorm;
    if (rel <= opts.tol) {
      ++it;
      break;
    }
    poisson.solve(r, z, 1.0 / aref);
    double rz_new = 0.0;
    for (std::size_t i = 0; i < P; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < P; ++i) p[i] = z[i] + beta * p[i];
  }
  out.iterations = it;
  // true residual of the returned iterate
  detail::apply_conductivity(M, x, f0, f1, q);
  double rr = 0.0;
  for (std::size_t i = 0; i < P; ++i) rr += (b[i] - q[i]) * (b[i] - q[i]);
  out.residual = std::sqrt(rr) / bnorm;
  if (out.residual > opts.stall_tol) {
    std::ostringstream msg;
    msg << "corrector solve stalled at relative residual " << out.residual << " after " << it
        << " iterations";
    throw CGStalled(msg.str(), out.residual);
  }
  out.phi.remove_mean();
  return out;
}

struct EffectiveTensor {
  Matrix A;
  std::array<double, 2> residuals{};
  std::array<int, 2> iterations{};
  int N = 0;
  int j = 1;
};

/// (A_cell)_ij = average of A (e_i + grad phi_i) . (e_j + grad phi_j).
///
/// With W(xi) = A xi . xi, (A_cell)_ii is the minimum of the axis-i cell
/// energy (twice the minimum for the 1/2 A xi . xi convention).
inline EffectiveTensor a_cell(const ConductivityMixture& M, const CgOptions& opts = {}) {
  const auto& g = M.grid();
  const std::size_t P = g.size();
  std::array<CorrectorResult, 2> corr{solve_corrector(M, 0, opts), solve_corrector(M, 1, opts)};
  std::array<GradientField, 2> grads{gradient(corr[0].phi), gradient(corr[1].phi)};

  EffectiveTensor out;
  out.A = Matrix(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      ExactSum acc;
      for (std::size_t idx = 0; idx < P; ++idx) {
        std::array<double, 2> ei{grads[i].at(0, 0, idx), grads[i].at(0, 1, idx)};
        std::array<double, 2> ek{grads[k].at(0, 0, idx), grads[k].at(0, 1, idx)};
        ei[i] += 1.0;
        ek[k] += 1.0;
        const Matrix& a = M.at(idx);
        double s = 0.0;
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) s += a(r, c) * ei[c] * ek[r];
        acc.add(s);
      }
      out.A(i, k) = acc.value() / static_cast<double>(P);
    }
  out.residuals = {corr[0].residual, corr[1].residual};
  out.iterations = {corr[0].iterations, corr[1].iterations};
  out.N = g.N();
  out.j = g.j();
  return out;
}

namespace detail {

inline PhaseMap reflect(const PhaseMap& chi, bool flip0, bool flip1) {
  const auto& g = chi.grid();
  const int side = g.side();
  std::vector<int> labels(g.size());
  for (int i0 = 0; i0 < side; ++i0)
    for (int i1 = 0; i1 < side; ++i1)
      labels[g.index(flip0 ? side - 1 - i0 : i0, flip1 ? side - 1 - i1 : i1)] = chi.at(i0, i1);
  return PhaseMap(g, chi.phases(), std::move(labels));
}

}  // namespace detail

/// A_cell averaged over the four axis reflections of the stencil:
/// (1/4) sum_R R A_cell[R chi, R A R] R.
///
/// The forward stencil is not mirror-symmetric, so a mirror-symmetric
/// geometry such as the checkerboard picks up an O(h) off-diagonal entry.
/// The average removes it and keeps the diagonal of the plain scheme.
inline EffectiveTensor a_cell_symmetrized(const ConductivityMixture& M, const CgOptions& opts = {}) {
  EffectiveTensor out;
  out.A = Matrix(2, 2);
  out.N = M.grid().N();
  out.j = M.grid().j();
  for (int s = 0; s < 4; ++s) {
    const bool f0 = (s & 1) != 0, f1 = (s & 2) != 0;
    const Matrix R = Matrix::diag(f0 ? -1.0 : 1.0, f1 ? -1.0 : 1.0);
    std::vector<Matrix> tensors;
    for (const auto& a : M.tensors()) tensors.push_back(matmul(R, matmul(a, R)));
    const EffectiveTensor T =
        a_cell(ConductivityMixture(std::move(tensors), detail::reflect(M.chi(), f0, f1)), opts);
    out.A += matmul(R, matmul(T.A, R)) * 0.25;
    for (int i = 0; i < 2; ++i) {
      out.residuals[i] = std::max(out.residuals[i], T.residuals[i]);
      out.iterations[i] += T.iterations[i];
    }
  }
  return out;
}

/// Arithmetic (Voigt) mean of the pixel tensors.
inline Matrix voigt_bound(const ConductivityMixture& M) {
  const auto counts = M.chi().counts();
  Matrix out(2, 2);
  const double P = static_cast<double>(M.grid().size());
  for (std::size_t k = 0; k < counts.size(); ++k) out += M.tensors()[k] * (counts[k] / P);
  return out;
}

/// Harmonic (Reuss) mean of the pixel tensors.
inline Matrix reuss_bound(const ConductivityMixture& M) {
  const auto counts = M.chi().counts();
  Matrix inv(2, 2);
  const double P = static_cast<double>(M.grid().size());
  for (std::size_t k = 0; k < counts.size(); ++k) inv += inverse(M.tensors()[k]) * (counts[k] / P);
  return inverse(inv);
}

struct BoundsReport {
  /// Smallest eigenvalue of sym(A_cell - Reuss) and of sym(Voigt - A_cell).
  double reuss_slack = 0.0;
  double voigt_slack = 0.0;
  bool holds(double tol = 1e-8) const { return reuss_slack >= -tol && voigt_slack >= -tol; }
};

inline BoundsReport check_bounds(const EffectiveTensor& T, const ConductivityMixture& M) {
  auto sym = [](const Matrix& a) {
    Matrix s = a;
    s(0, 1) = s(1, 0) = 0.5 * (a(0, 1) + a(1, 0));
    return s;
  };
  return {sym_eigenvalues(sym(T.A - reuss_bound(M)))[0],
          sym_eigenvalues(sym(voigt_bound(M) - T.A))[0]};
}

struct ThetaSample {
  int geom_id = 0;
  std::string kind;
  PhaseMap chi;
  EffectiveTensor tensor;
};

struct ThetaSampleSet {
  double theta = 0.0;
  std::vector<ThetaSample> samples;
  std::vector<std::string> warnings;
};

namespace detail {

/// Phase 1 on the band {(a i0 + b i1) mod side < width}: an exact-fraction
/// stripe with rational slope.
inline PhaseMap slanted_stripe(const PeriodicGrid& g, int a, int b, int width) {
  std::vector<int> labels(g.size());
  const int side = g.side();
  for (int i0 = 0; i0 < side; ++i0)
    for (int i1 = 0; i1 < side; ++i1) {
      const int t = PeriodicGrid::wrap(a * i0 + b * i1, side);
      labels[g.index(i0, i1)] = t < width ? 1 : 2;
    }
  return PhaseMap(g, 2, std::move(labels));
}

inline PhaseMap rectangle_inclusion(const PeriodicGrid& g, int w0, int w1) {
  std::vector<int> labels(g.size(), 2);
  for (int i0 = 0; i0 < w0; ++i0)
    for (int i1 = 0; i1 < w1; ++i1) labels[g.index(i0, i1)] = 1;
  return PhaseMap(g, 2, std::move(labels));
}

}  // namespace detail

/// Effective tensors of `count` exact-fraction geometries mixing A1 (phase 1,
/// fraction theta) and A2: pixel-representable stripes at several slopes,
/// checkerboards or rectangular inclusions, then random maps.
inline ThetaSampleSet p_theta_sample(const Matrix& A1, const Matrix& A2, double theta, int count,
                                     std::uint64_t seed, int N, const CgOptions& opts = {}) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidFraction("theta must lie in [0, 1]");
  const PeriodicGrid g(N, 1);
  const double exact = theta * static_cast<double>(g.size());
  const auto total = static_cast<std::size_t>(std::llround(exact));
  if (std::fabs(exact - static_cast<double>(total)) > 1e-9)
    throw NonIntegralFraction("theta * N^2 is not an integer");

  std::vector<std::pair<std::string, PhaseMap>> geoms;
  const double width_exact = theta * N;
  const int width = static_cast<int>(std::lround(width_exact));
  if (std::fabs(width_exact - width) < 1e-9) {
    geoms.emplace_back("stripe-axis1", detail::slanted_stripe(g, 1, 0, width));
    geoms.emplace_back("stripe-axis2", detail::slanted_stripe(g, 0, 1, width));
    geoms.emplace_back("stripe-diag", detail::slanted_stripe(g, 1, 1, width));
    geoms.emplace_back("stripe-antidiag", detail::slanted_stripe(g, 1, -1, width));
    geoms.emplace_back("stripe-slope2", detail::slanted_stripe(g, 1, 2, width));
    geoms.emplace_back("stripe-slope1/2", detail::slanted_stripe(g, 2, 1, width));
  }
  if (total * 2 == g.size()) {
    for (int cells = 2; cells <= 8 && N % cells == 0; cells *= 2)
      geoms.emplace_back("checkerboard-" + std::to_string(cells), checkerboard(g, cells));
  } else if (total > 0 && total < g.size()) {
    for (int w0 = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(total)))); w0 <= N; ++w0)
      if (total % w0 == 0 && total / w0 <= static_cast<std::size_t>(N)) {
        geoms.emplace_back("rectangle", detail::rectangle_inclusion(g, w0, static_cast<int>(total / w0)));
        break;
      }
  }
  const FractionVector fr({theta, 1.0 - theta});
  for (std::uint64_t k = 0; static_cast<int>(geoms.size()) < count; ++k)
    geoms.emplace_back("random", random_with_fraction(g, fr, seed + k));
  geoms.resize(std::min<std::size_t>(geoms.size(), static_cast<std::size_t>(std::max(count, 0))),
               {"", PhaseMap()});

  ThetaSampleSet out;
  out.theta = theta;
  for (std::size_t k = 0; k < geoms.size(); ++k) {
    try {
      ConductivityMixture M({A1, A2}, geoms[k].second);
      out.samples.push_back({static_cast<int>(k), geoms[k].first, geoms[k].second, a_cell(M, opts)});
    } catch (const CGStalled& e) {
      out.warnings.push_back("geometry " + std::to_string(k) + " (" + geoms[k].first +
                             ") skipped: " + e.what());
    }
  }
  return out;
}

inline void write_theta_csv(std::ostream& os, const ThetaSampleSet& set) {
  os << "geom_id,theta,a11,a12,a21,a22,res1,res2\n";
  const auto old = os.precision(17);
  for (const auto& s : set.samples)
    os << s.geom_id << ',' << set.theta << ',' << s.tensor.A(0, 0) << ',' << s.tensor.A(0, 1)
       << ',' << s.tensor.A(1, 0) << ',' << s.tensor.A(1, 1) << ',' << s.tensor.residuals[0]
       << ',' << s.tensor.residuals[1] << '\n';
  os.precision(old);
}

}  // namespace gclosure
