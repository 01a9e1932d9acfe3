#pragma once

#include <cmath>
#include <vector>

#include "gclosure/cell_solver.hpp"
#include "gclosure/errors.hpp"
#include "gclosure/exact_sum.hpp"
#include "gclosure/grid.hpp"

namespace gclosure {

/// u_k(x) = xi x + phi(k j x) / (k j) on the unit square, stored as its
/// periodic part together with the exact pixel gradient.
struct RecoveryField {
  Matrix xi;
  int k = 1;
  int j = 1;
  int cell_N = 0;
  /// Periodic part phi(k j x) / (k j) on the ambient grid.
  VectorField u;
  /// xi + grad phi at the matching cell pixel.
  GradientField gradient;

  const PeriodicGrid& grid() const { return u.grid(); }
  int ambient_N() const { return u.grid().N(); }
  /// Pixel of the unit cell seen by ambient pixel idx.
  std::size_t cell_pixel(std::size_t idx) const {
    const auto& g = grid();
    return static_cast<std::size_t>(g.row(idx) % cell_N) * cell_N + g.col(idx) % cell_N;
  }
};

/// Tiles the j-cell minimizer k x k times over an ambient grid of side
/// k j N_cell.
inline RecoveryField build_recovery(const VectorField& minimizer, const Matrix& xi, int k,
                                    int ambient_N) {
  const auto& src = minimizer.grid();
  if (k < 1) throw IndivisibleScale("scale k must be at least 1");
  if (static_cast<long long>(k) * src.side() != ambient_N)
    throw IndivisibleScale("ambient resolution must equal k * j * N_cell");
  RecoveryField rf;
  rf.xi = xi;
  rf.k = k;
  rf.j = src.j();
  rf.cell_N = src.N();
  const double scale = 1.0 / (static_cast<double>(k) * src.j());
  rf.u = VectorField(PeriodicGrid(ambient_N, 1), minimizer.m());
  const GradientField cell_grad = affine_gradient(xi, minimizer);
  rf.gradient = GradientField(rf.u.grid(), minimizer.m());
  const int side = src.side();
  for (int a0 = 0; a0 < ambient_N; ++a0)
    for (int a1 = 0; a1 < ambient_N; ++a1) {
      const std::size_t idx = rf.u.grid().index(a0, a1);
      const std::size_t s = src.index(a0 % side, a1 % side);
      for (int c = 0; c < minimizer.m(); ++c) {
        rf.u.at(c, idx) = minimizer.at(c, s) * scale;
        for (int a = 0; a < 2; ++a) rf.gradient.at(c, a, idx) = cell_grad.at(c, a, s);
      }
    }
  return rf;
}

inline RecoveryField build_recovery(const HomEntry& entry, const Matrix& xi, int k, int ambient_N) {
  return build_recovery(entry.result.minimizer, xi, k, ambient_N);
}

/// Energy of u_k over the unit square for the oscillating mixture
/// W(<k j x>, grad u_k); M is the unit-cell mixture.
inline double recovery_energy(const RecoveryField& rf, const MixtureDensity& M) {
  if (M.grid().j() != 1 || M.grid().N() != rf.cell_N)
    throw DimensionMismatch("mixture must live on the unit cell of the recovery field");
  ExactSum acc;
  for (std::size_t idx = 0; idx < rf.gradient.size(); ++idx)
    acc.add(M.evaluate(rf.cell_pixel(idx), rf.gradient.matrix(idx), nullptr));
  return acc.value() / static_cast<double>(rf.gradient.size());
}

/// Averages of the gradient (and of its determinant) over blocks x blocks
/// macro squares, row-major in the block index.
struct BlockAverages {
  int blocks = 0;
  std::vector<Matrix> gradient;
  std::vector<double> det;
};

inline BlockAverages block_averages(const RecoveryField& rf, int blocks) {
  const int side = rf.grid().side();
  if (blocks < 1 || side % blocks != 0)
    throw IndivisibleScale("block count must divide the ambient resolution");
  const int b = side / blocks;
  const int m = rf.gradient.m();
  BlockAverages out;
  out.blocks = blocks;
  for (int B0 = 0; B0 < blocks; ++B0)
    for (int B1 = 0; B1 < blocks; ++B1) {
      std::vector<ExactSum> g(2 * m);
      ExactSum d;
      for (int a0 = B0 * b; a0 < (B0 + 1) * b; ++a0)
        for (int a1 = B1 * b; a1 < (B1 + 1) * b; ++a1) {
          const std::size_t idx = rf.grid().index(a0, a1);
          for (int k = 0; k < 2 * m; ++k) g[k].add(rf.gradient.at(k / 2, k % 2, idx));
          if (m == 2) d.add(det(rf.gradient.matrix(idx)));
        }
      const double n = static_cast<double>(b) * b;
      Matrix avg(m, 2);
      for (int k = 0; k < 2 * m; ++k) avg[k] = g[k].value() / n;
      out.gradient.push_back(avg);
      out.det.push_back(m == 2 ? d.value() / n : 0.0);
    }
  return out;
}

struct DeterminantGapReport {
  int j = 1;
  int k = 1;
  int ambient_N = 0;
  int blocks = 0;
  /// Recovery-field energy (equal to the j-cell value).
  double E_k = 0.0;
  /// Unit-cell value, a lower bound for every recovery energy in the limit.
  double lower_bound = 0.0;
  /// Block averages of det(grad u_k).
  std::vector<double> det_weak_avg;
  /// det(xi), the determinant of the weak limit, on every block.
  double det_of_limit_avg = 0.0;
  /// Cell average of det(xi + grad phi_j).
  double det_cell_avg = 0.0;
  /// Largest block deviation of det_weak_avg from det_cell_avg.
  double gap = 0.0;
  /// Largest block deviation of det_weak_avg from det(xi).
  double limit_gap = 0.0;
  /// Largest block deviation of the averaged gradient from xi.
  double weak_deviation = 0.0;
  bool headline() const { return lower_bound > 0.0 && E_k < lower_bound / 3.0; }
};

/// Dashboard from precomputed unit-cell and j-cell solves.
inline DeterminantGapReport determinant_gap(const MixtureDensity& M, const Matrix& xi,
                                            const CellResult& cell, const HomEntry& entry, int k,
                                            int ambient_N, int blocks = 4) {
  if (M.m() != 2) throw DimensionMismatch("the determinant dashboard needs m = 2");
  const RecoveryField rf = build_recovery(entry, xi, k, ambient_N);
  DeterminantGapReport r;
  r.j = entry.j;
  r.k = k;
  r.ambient_N = ambient_N;
  r.blocks = blocks;
  r.E_k = recovery_energy(rf, M);
  r.lower_bound = cell.value;
  r.det_of_limit_avg = det(xi);

  const GradientField cg = affine_gradient(xi, entry.result.minimizer);
  ExactSum d;
  for (std::size_t idx = 0; idx < cg.size(); ++idx) d.add(det(cg.matrix(idx)));
  r.det_cell_avg = d.value() / static_cast<double>(cg.size());

  const BlockAverages ba = block_averages(rf, blocks);
  r.det_weak_avg = ba.det;
  for (std::size_t b = 0; b < ba.det.size(); ++b) {
    r.gap = std::max(r.gap, std::fabs(ba.det[b] - r.det_cell_avg));
    r.limit_gap = std::max(r.limit_gap, std::fabs(ba.det[b] - r.det_of_limit_avg));
    r.weak_deviation = std::max(r.weak_deviation, norm(ba.gradient[b] - xi));
  }
  return r;
}

/// Solves the unit cell and the j-cell (through the doubling chain when j is
/// a power of two) and builds the dashboard.
inline DeterminantGapReport determinant_gap(const MixtureDensity& M, const Matrix& xi, int j, int k,
                                            int ambient_N, int blocks = 4,
                                            const SolverOptions& opts = {}) {
  const int side = M.grid().N();
  if (static_cast<long long>(k) * j * side != ambient_N)
    throw IndivisibleScale("ambient resolution must equal k * j * N_cell");
  std::vector<int> chain{1};
  if ((j & (j - 1)) == 0)
    for (int t = 2; t <= j; t *= 2) chain.push_back(t);
  else if (j > 1)
    chain.push_back(j);
  const auto entries = hom_integrand(M, xi, chain, opts);
  return determinant_gap(M, xi, entries.front().result, entries.back(), k, ambient_N, blocks);
}

}  // namespace gclosure
