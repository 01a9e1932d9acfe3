#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gclosure/errors.hpp"
#include "gclosure/grid.hpp"

namespace gclosure {

/// Volume fractions theta, one per phase.
class FractionVector {
 public:
  FractionVector() = default;
  explicit FractionVector(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.empty()) throw InvalidFraction("fraction vector is empty");
    double sum = 0.0;
    for (double t : theta_) {
      if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidFraction("fractions must be finite and non-negative");
      sum += t;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "fractions sum to " << sum << ", expected 1";
      throw InvalidFraction(msg.str());
    }
  }

  std::size_t size() const { return theta_.size(); }
  double operator[](std::size_t i) const { return theta_[i]; }
  const std::vector<double>& values() const { return theta_; }

 private:
  std::vector<double> theta_;
};

/// Largest-remainder rounding of theta * total; ties go to the lower phase index.
inline std::vector<std::size_t> largest_remainder_counts(const FractionVector& theta,
                                                         std::size_t total) {
  const std::size_t k = theta.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> rem(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = theta[i] * static_cast<double>(total);
    // snap values within rounding noise of an integer
    double fl = std::floor(exact);
    if (exact - fl > 1.0 - 1e-9) fl += 1.0;
    counts[i] = static_cast<std::size_t>(fl);
    rem[i] = std::max(0.0, exact - fl);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) counts[order[r % k]] += 1;
  while (assigned > total) {
    // only reachable through snapping; trim from the largest phases
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

/// Per-pixel phase label in {1..phases}: a partition of the periodic cell.
class PhaseMap {
 public:
  PhaseMap() = default;
  PhaseMap(PeriodicGrid grid, int phases, std::vector<int> labels)
      : grid_(grid), phases_(phases), labels_(std::move(labels)) {
    if (phases < 1) throw FormatError("phase count must be positive");
    if (labels_.size() != grid_.size()) throw DimensionMismatch("label count does not match grid");
    for (int l : labels_)
      if (l < 1 || l > phases) throw FormatError("phase label out of range");
  }
  PhaseMap(PeriodicGrid grid, int phases, int fill)
      : PhaseMap(grid, phases, std::vector<int>(grid.size(), fill)) {}

  const PeriodicGrid& grid() const { return grid_; }
  int phases() const { return phases_; }
  int operator[](std::size_t idx) const { return labels_[idx]; }
  int at(int i0, int i1) const { return labels_[grid_.index(i0, i1)]; }
  const std::vector<int>& labels() const { return labels_; }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(phases_, 0);
    for (int l : labels_) ++c[l - 1];
    return c;
  }

  friend bool operator==(const PhaseMap&, const PhaseMap&) = default;

 private:
  PeriodicGrid grid_;
  int phases_ = 1;
  std::vector<int> labels_;
};

inline FractionVector fractions(const PhaseMap& chi) {
  const auto c = chi.counts();
  std::vector<double> theta(c.size());
  const double total = static_cast<double>(chi.grid().size());
  for (std::size_t i = 0; i < c.size(); ++i) theta[i] = static_cast<double>(c[i]) / total;
  // re-normalise the last entry so the sum is 1 to rounding
  return FractionVector(std::move(theta));
}

/// Two-phase slab: phase 1 where the index along `normal_axis` (1 or 2) is
/// below fraction * side, phase 2 elsewhere.
inline PhaseMap stripe(const PeriodicGrid& grid, int normal_axis, double fraction) {
  if (normal_axis != 1 && normal_axis != 2)
    throw DimensionMismatch("normal axis must be 1 or 2");
  const double exact = fraction * grid.side();
  const double width = std::round(exact);
  if (fraction < 0.0 || fraction > 1.0 || std::fabs(exact - width) > 1e-9) {
    std::ostringstream msg;
    msg << "fraction " << fraction << " is not a whole number of pixels on a side of "
        << grid.side();
    throw NonIntegralFraction(msg.str());
  }
  const int w = static_cast<int>(width);
  std::vector<int> labels(grid.size());
  for (int i0 = 0; i0 < grid.side(); ++i0)
    for (int i1 = 0; i1 < grid.side(); ++i1) {
      const int coord = normal_axis == 1 ? i0 : i1;
      labels[grid.index(i0, i1)] = coord < w ? 1 : 2;
    }
  return PhaseMap(grid, 2, std::move(labels));
}

/// Two-phase checkerboard with `cells` x `cells` squares per period (cells even).
inline PhaseMap checkerboard(const PeriodicGrid& grid, int cells = 2) {
  if (cells < 2 || cells % 2 != 0 || grid.side() % cells != 0)
    throw IndivisibleScale("checkerboard needs an even square count dividing the grid side");
  const int w = grid.side() / cells;
  std::vector<int> labels(grid.size());
  for (int i0 = 0; i0 < grid.side(); ++i0)
    for (int i1 = 0; i1 < grid.side(); ++i1)
      labels[grid.index(i0, i1)] = ((i0 / w + i1 / w) % 2 == 0) ? 1 : 2;
  return PhaseMap(grid, 2, std::move(labels));
}

/// Random pixel assignment with counts equal to the largest-remainder
/// rounding of theta; deterministic for a fixed seed.
inline PhaseMap random_with_fraction(const PeriodicGrid& grid, const FractionVector& theta,
                                     std::uint64_t seed) {
  const auto counts = largest_remainder_counts(theta, grid.size());
  std::vector<int> labels;
  labels.reserve(grid.size());
  for (std::size_t p = 0; p < counts.size(); ++p)
    labels.insert(labels.end(), counts[p], static_cast<int>(p + 1));
  std::mt19937_64 rng(seed);
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(labels[i - 1], labels[pick(rng)]);
  }
  return PhaseMap(grid, static_cast<int>(theta.size()), std::move(labels));
}

struct AdjustResult {
  PhaseMap map;
  std::size_t moved = 0;
};

/// Number of pixels that must change label to move chi onto the target
/// counts: half the l1 distance between the two count vectors.
inline std::size_t adjustment_distance(const PhaseMap& chi, const FractionVector& target) {
  const auto have = chi.counts();
  const auto want = largest_remainder_counts(target, chi.grid().size());
  std::size_t l1 = 0;
  for (std::size_t i = 0; i < have.size(); ++i)
    l1 += have[i] > want[i] ? have[i] - want[i] : want[i] - have[i];
  return l1 / 2;
}

/// Move chi onto exact target counts by relabelling the fewest pixels.
///
/// Surplus pixels are released from over-represented phases in order of
/// squared distance to the cell corner (lexicographic tie-break), then the
/// released pixels are handed, in the same order, to under-represented
/// phases by ascending phase index.
inline AdjustResult adjust_fraction(const PhaseMap& chi, const FractionVector& target) {
  const auto& grid = chi.grid();
  if (target.size() != static_cast<std::size_t>(chi.phases()))
    throw DimensionMismatch("target fraction count differs from phase count");
  const auto want = largest_remainder_counts(target, grid.size());
  const auto have = chi.counts();
  std::vector<long long> surplus(have.size());
  for (std::size_t i = 0; i < have.size(); ++i)
    surplus[i] = static_cast<long long>(have[i]) - static_cast<long long>(want[i]);

  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t idx) {
    const long long r = grid.row(idx), c = grid.col(idx);
    return r * r + c * c;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<int> labels = chi.labels();
  std::vector<std::size_t> released;
  for (std::size_t idx : order) {
    const int l = labels[idx];
    if (surplus[l - 1] > 0) {
      --surplus[l - 1];
      released.push_back(idx);
    }
  }
  std::size_t next = 0;
  for (std::size_t p = 0; p < surplus.size(); ++p)
    for (; surplus[p] < 0; ++surplus[p]) labels[released[next++]] = static_cast<int>(p + 1);

  return {PhaseMap(grid, chi.phases(), std::move(labels)), released.size()};
}

/// Number of pixels whose label differs between two maps on the same grid.
inline std::size_t symmetric_difference(const PhaseMap& a, const PhaseMap& b) {
  if (!(a.grid() == b.grid())) throw DimensionMismatch("maps live on different grids");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.grid().size(); ++i) n += a[i] != b[i];
  return n;
}

/// Rescaled geometry chi(<k y>) on the same grid.
///
/// Along each axis pixel i = q * (side/k) + r is read from pixel k * r + q:
/// the k-fold periodic copy of chi sampled at <k y>, with the sub-pixel
/// offset q < k chosen so that the map is a pixel permutation. Phase counts
/// are therefore preserved exactly for every chi.
inline PhaseMap oscillate(const PhaseMap& chi, int k) {
  const auto& grid = chi.grid();
  const int side = grid.side();
  if (k < 1 || side % k != 0) {
    std::ostringstream msg;
    msg << "scale " << k << " does not divide the grid side " << side;
    throw IndivisibleScale(msg.str());
  }
  const int period = side / k;
  auto source = [&](int i) { return k * (i % period) + i / period; };
  std::vector<int> labels(grid.size());
  for (int i0 = 0; i0 < side; ++i0)
    for (int i1 = 0; i1 < side; ++i1)
      labels[grid.index(i0, i1)] = chi.at(source(i0), source(i1));
  return PhaseMap(grid, chi.phases(), std::move(labels));
}

/// The unit-cell map repeated j x j times on the multi-cell (0,j)^2.
inline PhaseMap tile(const PhaseMap& chi, int factor) {
  const auto& g = chi.grid();
  const PeriodicGrid big = g.multiple(factor);
  std::vector<int> labels(big.size());
  for (int i0 = 0; i0 < big.side(); ++i0)
    for (int i1 = 0; i1 < big.side(); ++i1) labels[big.index(i0, i1)] = chi.at(i0, i1);
  return PhaseMap(big, chi.phases(), std::move(labels));
}

// PhaseMap file: `gclosure-phasemap v1 n=2 N=<int> j=<int> phases=<int>`
// followed by side rows of side labels (row index = i0 along y_1).

inline void write_phasemap(std::ostream& os, const PhaseMap& chi) {
  const auto& g = chi.grid();
  os << "gclosure-phasemap v1 n=2 N=" << g.N() << " j=" << g.j() << " phases=" << chi.phases()
     << '\n';
  for (int i0 = 0; i0 < g.side(); ++i0) {
    for (int i1 = 0; i1 < g.side(); ++i1) {
      if (i1) os << ' ';
      os << chi.at(i0, i1);
    }
    os << '\n';
  }
}

inline PhaseMap read_phasemap(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("empty phase map");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "gclosure-phasemap" || version != "v1")
    throw FormatError("not a gclosure-phasemap v1 file");
  int n = -1, N = -1, j = -1, phases = -1;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("malformed header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    int value = 0;
    try {
      value = std::stoi(tok.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("malformed header value in '" + tok + "'");
    }
    if (key == "n") n = value;
    else if (key == "N") N = value;
    else if (key == "j") j = value;
    else if (key == "phases") phases = value;
    else throw FormatError("unknown header key '" + key + "'");
  }
  if (n != 2) throw FormatError("only n=2 phase maps are supported");
  if (N < 1 || j < 1 || phases < 1) throw FormatError("missing or invalid N, j or phases");
  const PeriodicGrid grid(N, j);
  std::vector<int> labels(grid.size());
  for (auto& l : labels)
    if (!(is >> l)) throw FormatError("phase map body is truncated");
  if (is >> tok) throw FormatError("trailing data after phase map body");
  return PhaseMap(grid, phases, std::move(labels));
}

}  // namespace gclosure
