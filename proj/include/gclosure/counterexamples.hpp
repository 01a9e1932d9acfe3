#pragma once

#include <cmath>
#include <vector>

#include "gclosure/densities.hpp"
#include "gclosure/microstructure.hpp"

namespace gclosure::named {

inline Matrix O() { return Matrix::diag(0.0, 0.0); }
inline Matrix I() { return Matrix::diag(1.0, 1.0); }
inline Matrix A() { return Matrix::diag(-1.0, 1.0); }
inline Matrix B() { return Matrix::diag(0.0, 1.0); }
inline Matrix C() { return Matrix::diag(0.0, 0.5); }

}  // namespace gclosure::named

namespace gclosure {

/// Growth constants valid for the polyconvex pair densities built on
/// atoms of norm <= sqrt(2) (checked by sampling in the tests).
inline GrowthConstants polymax_growth(double p) {
  return {std::pow(2.0, -p), 0.5 * std::pow(2.0, 0.5 * p), std::pow(2.0, p)};
}

/// Growth constants for dist^p to atoms of norm <= r.
inline GrowthConstants distpower_growth(double p, double r) {
  // (|xi| - r)^p >= 2^{1-p} |xi|^p - r^p and (|xi| + r)^p <= 2^{p-1}(|xi|^p + r^p)
  return {std::pow(2.0, 1.0 - p), std::pow(r, p), std::pow(2.0, p - 1.0) * std::max(1.0, std::pow(r, p)) * 2.0};
}

enum class UnicoVariant {
  /// max{dist^p to the segment, dist^{p/2} to the lifted segment}: polyconvex.
  PolyMax,
  /// dist^p to the two atoms.
  DistPower,
  /// dist^p to {O, A} in P and to the segment [O, I] elsewhere.
  DistPowerHull,
};

/// Zero sets {O, A} on P = (0,1/2) x (0,1) and {O, I} on the rest of Q.
inline MixtureDensity unico_mixture(int N, UnicoVariant variant, double p, double eps = 1e-3) {
  const PeriodicGrid grid(N, 1);
  PhaseMap chi = stripe(grid, 1, 0.5);
  std::vector<EnergyDensity> phases;
  switch (variant) {
    case UnicoVariant::PolyMax:
      phases.push_back(EnergyDensity::poly_max(named::O(), named::A(), p, eps, polymax_growth(p)));
      phases.push_back(EnergyDensity::poly_max(named::O(), named::I(), p, eps, polymax_growth(p)));
      break;
    case UnicoVariant::DistPower:
    case UnicoVariant::DistPowerHull: {
      const auto g = distpower_growth(p, std::sqrt(2.0));
      phases.push_back(EnergyDensity::dist_power({named::O(), named::A()}, p, eps, false, g));
      phases.push_back(EnergyDensity::dist_power({named::O(), named::I()}, p, eps,
                                                 variant == UnicoVariant::DistPowerHull, g));
      break;
    }
  }
  return MixtureDensity(std::move(phases), std::move(chi));
}

/// Two isotropic quadratic phases a_i |xi|^2 on the same stripe geometry.
inline MixtureDensity unico_convex_control(int N, double a1 = 1.0, double a2 = 2.0) {
  const PeriodicGrid grid(N, 1);
  return MixtureDensity({EnergyDensity::isotropic(a1, 2), EnergyDensity::isotropic(a2, 2)},
                        stripe(grid, 1, 0.5));
}

/// The sawtooth phi_B(y) = (|y_1 - 1/2|, 0): B + grad phi_B is A on P and I off P.
inline VectorField unico_field(const PeriodicGrid& grid) {
  VectorField f(grid, 2);
  for (int i0 = 0; i0 < grid.side(); ++i0) {
    const double y1 = static_cast<double>(i0 % grid.N()) / grid.N();
    for (int i1 = 0; i1 < grid.side(); ++i1) f.at(0, grid.index(i0, i1)) = std::fabs(y1 - 0.5);
  }
  return f;
}

}  // namespace gclosure
