#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gclosure/errors.hpp"
#include "gclosure/matrix.hpp"
#include "gclosure/microstructure.hpp"

namespace gclosure {

/// Declared constants of the growth class:
/// a1 |xi|^p - a2 <= W(xi) <= a3 (1 + |xi|^p).
struct GrowthConstants {
  double a1 = 1.0;
  double a2 = 0.0;
  double a3 = 1.0;
};

/// xi . A xi with A symmetric positive-definite on the flattened matrix.
struct Quadratic {
  std::vector<double> A;  // dim x dim, row-major
  int dim = 4;
};

/// dist^p to a finite atom set (hull = false) or to its convex hull.
struct DistPower {
  std::vector<Matrix> atoms;
  bool hull = false;
  double eps = 1e-3;
};

/// W(xi) = max{ dist^p(xi, [P0,P1]), dist^{p/2}((xi, det xi), [(P0,det P0),(P1,det P1)]) }
/// for a pair of 2x2 matrices: polyconvex with zero set {P0, P1}.
struct PolyMax {
  Matrix first;
  Matrix second;
  double eps = 1e-3;
  /// Width of the smoothed maximum; 0 gives the exact max.
  double max_eps = 1e-5;
};

namespace detail {

/// Squared distance from x to the segment [a, b] in R^K and the projection.
template <std::size_t K>
double segment_distance2(const std::array<double, K>& x, const std::array<double, K>& a,
                         const std::array<double, K>& b, std::array<double, K>& proj) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    num += (x[k] - a[k]) * (b[k] - a[k]);
    den += (b[k] - a[k]) * (b[k] - a[k]);
  }
  const double t = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    proj[k] = a[k] + t * (b[k] - a[k]);
    d2 += (x[k] - proj[k]) * (x[k] - proj[k]);
  }
  return d2;
}

/// (d^2 + eps^2)^{q/2} - eps^q and its derivative with respect to d^2.
inline double smoothed_power(double d2, double q, double eps, double* deriv) {
  const double e2 = eps * eps;
  const double base = d2 + e2;
  if (base <= 0.0) {
    if (deriv) *deriv = 0.0;
    return 0.0;
  }
  const double val = std::pow(base, 0.5 * q);
  if (deriv) *deriv = 0.5 * q * val / base;
  return std::max(0.0, val - std::pow(eps, q));
}

inline std::array<double, 4> flat(const Matrix& m) { return m.v; }

}  // namespace detail

/// Stored-energy density of one constituent.
class EnergyDensity {
 public:
  using Variant = std::variant<Quadratic, DistPower, PolyMax>;

  EnergyDensity(Variant variant, double p, GrowthConstants alpha, int m)
      : variant_(std::move(variant)), p_(p), alpha_(alpha), m_(m) {
    if (!(p > 1.0)) throw Error("growth exponent must exceed 1");
    if (!(alpha.a1 > 0.0) || !(alpha.a3 > 0.0) || !(alpha.a2 >= 0.0))
      throw Error("growth constants need a1 > 0, a2 >= 0, a3 > 0");
    if (m != 1 && m != 2) throw DimensionMismatch("target dimension must be 1 or 2");
    validate();
  }

  static EnergyDensity quadratic(std::vector<double> A, int m, GrowthConstants alpha = {}) {
    const int dim = 2 * m;
    return EnergyDensity(Quadratic{std::move(A), dim}, 2.0, alpha, m);
  }
  /// a |xi|^2.
  static EnergyDensity isotropic(double a, int m) {
    const int dim = 2 * m;
    std::vector<double> A(dim * dim, 0.0);
    for (int i = 0; i < dim; ++i) A[i * dim + i] = a;
    return quadratic(std::move(A), m, {a, 0.0, a});
  }
  static EnergyDensity dist_power(std::vector<Matrix> atoms, double p, double eps, bool hull,
                                  GrowthConstants alpha) {
    const int m = atoms.empty() ? 2 : atoms.front().rows;
    return EnergyDensity(DistPower{std::move(atoms), hull, eps}, p, alpha, m);
  }
  static EnergyDensity poly_max(const Matrix& first, const Matrix& second, double p, double eps,
                                GrowthConstants alpha, double max_eps = 1e-5) {
    return EnergyDensity(PolyMax{first, second, eps, max_eps}, p, alpha, 2);
  }

  const Variant& variant() const { return variant_; }
  double p() const { return p_; }
  const GrowthConstants& alpha() const { return alpha_; }
  int m() const { return m_; }
  std::string name() const {
    return std::visit(
        [](const auto& v) -> std::string {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Quadratic>) return "quadratic";
          else if constexpr (std::is_same_v<V, DistPower>) return v.hull ? "distpower-hull" : "distpower";
          else return "polymax";
        },
        variant_);
  }

  /// Convex variants: quadratic forms and distance powers to a convex set.
  bool is_convex() const {
    if (std::holds_alternative<Quadratic>(variant_)) return true;
    if (const auto* d = std::get_if<DistPower>(&variant_)) return d->hull || d->atoms.size() == 1;
    return false;
  }
  bool is_distance() const { return std::holds_alternative<DistPower>(variant_); }

  /// Smoothing radius of the distance terms (0 for quadratic densities).
  double smoothing() const {
    if (const auto* d = std::get_if<DistPower>(&variant_)) return d->eps;
    if (const auto* d = std::get_if<PolyMax>(&variant_)) return d->eps;
    return 0.0;
  }
  EnergyDensity with_smoothing(double eps) const {
    EnergyDensity out = *this;
    if (auto* d = std::get_if<DistPower>(&out.variant_)) d->eps = eps;
    if (auto* d = std::get_if<PolyMax>(&out.variant_)) d->eps = eps;
    return out;
  }

  /// W(xi); when grad is non-null it receives dW/dxi.
  double evaluate(const Matrix& xi, Matrix* grad) const {
    if (xi.rows != m_ || xi.cols != 2) throw DimensionMismatch("argument shape mismatch");
    return std::visit([&](const auto& v) { return eval_variant(v, xi, grad); }, variant_);
  }

 private:
  void validate() const {
    if (const auto* q = std::get_if<Quadratic>(&variant_)) {
      const int d = q->dim;
      if (d != 2 * m_ || static_cast<int>(q->A.size()) != d * d)
        throw DimensionMismatch("quadratic form must be (2m)x(2m)");
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
          if (std::fabs(q->A[i * d + k] - q->A[k * d + i]) > 1e-12)
            throw Error("quadratic form is not symmetric");
      // Cholesky as positive-definiteness test
      std::vector<double> L(d * d, 0.0);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k <= i; ++k) {
          double s = q->A[i * d + k];
          for (int r = 0; r < k; ++r) s -= L[i * d + r] * L[k * d + r];
          if (i == k) {
            if (!(s > 0.0)) throw Error("quadratic form is not positive-definite");
            L[i * d + i] = std::sqrt(s);
          } else {
            L[i * d + k] = s / L[k * d + k];
          }
        }
    } else if (const auto* dp = std::get_if<DistPower>(&variant_)) {
      if (dp->atoms.empty()) throw Error("distance density needs at least one atom");
      for (const auto& a : dp->atoms)
        if (a.rows != m_ || a.cols != 2) throw DimensionMismatch("atom shape mismatch");
      if (dp->hull && dp->atoms.size() > 2)
        throw Error("convex hull distance supports one or two atoms (a segment)");
      if (!(dp->eps >= 0.0)) throw Error("smoothing radius must be non-negative");
    } else if (const auto* pm = std::get_if<PolyMax>(&variant_)) {
      if (m_ != 2) throw DimensionMismatch("polyconvex max density needs m = n = 2");
      if (pm->first.rows != 2 || pm->second.rows != 2)
        throw DimensionMismatch("polyconvex atoms must be 2x2");
      if (!(pm->eps >= 0.0) || !(pm->max_eps >= 0.0))
        throw Error("smoothing radius must be non-negative");
    }
  }

  double eval_variant(const Quadratic& q, const Matrix& xi, Matrix* grad) const {
    const int d = q.dim;
    double val = 0.0;
    if (grad) *grad = Matrix(xi.rows, xi.cols);
    for (int i = 0; i < d; ++i) {
      double row = 0.0;
      for (int k = 0; k < d; ++k) row += q.A[i * d + k] * xi.v[k];
      val += xi.v[i] * row;
      if (grad) grad->v[i] = 2.0 * row;
    }
    return val;
  }

  double eval_variant(const DistPower& dp, const Matrix& xi, Matrix* grad) const {
    Matrix nearest;
    double d2 = 0.0;
    if (dp.hull && dp.atoms.size() == 2) {
      std::array<double, 4> proj{};
      d2 = detail::segment_distance2<4>(xi.v, dp.atoms[0].v, dp.atoms[1].v, proj);
      nearest = Matrix(xi.rows, xi.cols);
      nearest.v = proj;
    } else {
      double best = std::numeric_limits<double>::infinity();
      double second = best;
      std::size_t arg = 0;
      for (std::size_t a = 0; a < dp.atoms.size(); ++a) {
        const double da = norm2(xi - dp.atoms[a]);
        if (da < best) {
          second = best;
          best = da;
          arg = a;
        } else if (da < second) {
          second = da;
        }
      }
      if (grad && dp.eps == 0.0 && std::isfinite(second) &&
          std::fabs(std::sqrt(second) - std::sqrt(best)) <= 1e-12) {
        std::ostringstream msg;
        msg << "nearest atom is ambiguous at " << xi << "; use a positive smoothing radius";
        throw MedialAxis(msg.str());
      }
      d2 = best;
      nearest = dp.atoms[arg];
    }
    double deriv = 0.0;
    const double val = detail::smoothed_power(d2, p_, dp.eps, grad ? &deriv : nullptr);
    if (grad) *grad = (xi - nearest) * (2.0 * deriv);
    return val;
  }

  double eval_variant(const PolyMax& pm, const Matrix& xi, Matrix* grad) const {
    std::array<double, 4> proj4{};
    const double d1 = detail::segment_distance2<4>(xi.v, pm.first.v, pm.second.v, proj4);
    const double z = det(xi);
    const std::array<double, 5> x5{xi.v[0], xi.v[1], xi.v[2], xi.v[3], z};
    const std::array<double, 5> a5{pm.first.v[0], pm.first.v[1], pm.first.v[2], pm.first.v[3],
                                   det(pm.first)};
    const std::array<double, 5> b5{pm.second.v[0], pm.second.v[1], pm.second.v[2],
                                   pm.second.v[3], det(pm.second)};
    std::array<double, 5> proj5{};
    const double d2 = detail::segment_distance2<5>(x5, a5, b5, proj5);

    double da = 0.0, db = 0.0;
    const double a = detail::smoothed_power(d1, p_, pm.eps, grad ? &da : nullptr);
    const double b = detail::smoothed_power(d2, 0.5 * p_, pm.eps, grad ? &db : nullptr);

    double val, wa, wb;
    if (pm.max_eps > 0.0) {
      const double r = std::sqrt((a - b) * (a - b) + pm.max_eps * pm.max_eps);
      val = 0.5 * (a + b + r - pm.max_eps);
      wa = 0.5 * (1.0 + (a - b) / r);
      wb = 0.5 * (1.0 - (a - b) / r);
    } else {
      val = std::max(a, b);
      wa = a >= b ? 1.0 : 0.0;
      wb = 1.0 - wa;
    }
    if (grad) {
      Matrix g(2, 2);
      const Matrix cof = cofactor(xi);
      for (int k = 0; k < 4; ++k) {
        const double ga = 2.0 * da * (xi.v[k] - proj4[k]);
        const double gb = 2.0 * db * ((xi.v[k] - proj5[k]) + (z - proj5[4]) * cof.v[k]);
        g.v[k] = wa * ga + wb * gb;
      }
      *grad = g;
    }
    return val;
  }

  Variant variant_;
  double p_;
  GrowthConstants alpha_;
  int m_;
};

inline double eval(const EnergyDensity& W, const Matrix& xi) { return W.evaluate(xi, nullptr); }

inline Matrix grad(const EnergyDensity& W, const Matrix& xi) {
  Matrix g;
  W.evaluate(xi, &g);
  return g;
}

/// W_chi(x, xi) = sum_i chi_i(x) W_i(xi) on a phase map.
class MixtureDensity {
 public:
  MixtureDensity(std::vector<EnergyDensity> phases, PhaseMap chi)
      : phases_(std::move(phases)), chi_(std::move(chi)) {
    if (phases_.empty()) throw Error("mixture needs at least one phase");
    if (static_cast<int>(phases_.size()) != chi_.phases())
      throw DimensionMismatch("phase map and density list disagree on the phase count");
    for (const auto& w : phases_) {
      if (w.p() != phases_.front().p()) throw Error("all phases must share the growth exponent");
      if (w.m() != phases_.front().m()) throw DimensionMismatch("phases disagree on m");
    }
  }

  const std::vector<EnergyDensity>& phases() const { return phases_; }
  const PhaseMap& chi() const { return chi_; }
  const PeriodicGrid& grid() const { return chi_.grid(); }
  int m() const { return phases_.front().m(); }
  double p() const { return phases_.front().p(); }
  bool is_convex() const {
    return std::all_of(phases_.begin(), phases_.end(),
                       [](const EnergyDensity& w) { return w.is_convex(); });
  }

  const EnergyDensity& at(std::size_t pixel) const { return phases_[chi_[pixel] - 1]; }
  double evaluate(std::size_t pixel, const Matrix& xi, Matrix* grad) const {
    return at(pixel).evaluate(xi, grad);
  }

  /// Same densities on the geometry tiled j x j.
  MixtureDensity tiled(int j) const { return MixtureDensity(phases_, tile(chi_, j)); }
  MixtureDensity with_smoothing(double eps) const {
    std::vector<EnergyDensity> ph;
    for (const auto& w : phases_) ph.push_back(w.with_smoothing(eps));
    return MixtureDensity(std::move(ph), chi_);
  }

 private:
  std::vector<EnergyDensity> phases_;
  PhaseMap chi_;
};

inline double mixture_eval(const MixtureDensity& M, std::size_t pixel, const Matrix& xi) {
  return M.evaluate(pixel, xi, nullptr);
}

inline Matrix mixture_grad(const MixtureDensity& M, std::size_t pixel, const Matrix& xi) {
  Matrix g;
  M.evaluate(pixel, xi, &g);
  return g;
}

struct GrowthReport {
  bool holds = true;
  /// min over samples of W - a1 |xi|^p + a2
  double coercivity_margin = std::numeric_limits<double>::infinity();
  /// min over samples of a3 (1 + |xi|^p) - W
  double growth_margin = std::numeric_limits<double>::infinity();
  Matrix worst_coercivity_point;
  Matrix worst_growth_point;
  std::size_t samples = 0;
};

/// Sampled check of the declared growth constants: uniform points in the
/// ball of the given radius plus points along random rays out to 8 * radius.
inline GrowthReport verify_growth(const EnergyDensity& W, std::size_t sample_count, double radius,
                                  std::uint64_t seed = 0) {
  if (sample_count < 1) throw Error("verify_growth needs at least one sample");
  const int dim = 2 * W.m();
  const auto& al = W.alpha();
  const double p = W.p();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  GrowthReport rep;
  auto check = [&](const Matrix& xi) {
    const double w = eval(W, xi);
    const double np = std::pow(norm(xi), p);
    const double c = w - al.a1 * np + al.a2;
    const double g = al.a3 * (1.0 + np) - w;
    const double slack = 1e-12 * (1.0 + np);
    if (c < rep.coercivity_margin) {
      rep.coercivity_margin = c;
      rep.worst_coercivity_point = xi;
    }
    if (g < rep.growth_margin) {
      rep.growth_margin = g;
      rep.worst_growth_point = xi;
    }
    if (c < -slack || g < -slack) rep.holds = false;
    ++rep.samples;
  };
  auto random_direction = [&] {
    Matrix d(W.m(), 2);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        d.v[k] = gauss(rng);
        n2 += d.v[k] * d.v[k];
      }
    } while (n2 == 0.0);
    return d * (1.0 / std::sqrt(n2));
  };

  check(Matrix::zero(W.m(), 2));
  for (std::size_t s = 0; s < sample_count; ++s) {
    const double r = radius * std::pow(unif(rng), 1.0 / dim);
    check(random_direction() * r);
  }
  const std::size_t rays = std::max<std::size_t>(1, sample_count / 16);
  for (std::size_t s = 0; s < rays; ++s) {
    const Matrix d = random_direction();
    for (double t = radius / 8.0; t <= 8.0 * radius * (1.0 + 1e-12); t *= 2.0) check(d * t);
  }
  return rep;
}

}  // namespace gclosure
