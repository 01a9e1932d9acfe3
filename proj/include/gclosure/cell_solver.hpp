#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "gclosure/densities.hpp"
#include "gclosure/errors.hpp"
#include "gclosure/exact_sum.hpp"
#include "gclosure/grid.hpp"
#include "gclosure/lbfgs.hpp"
#include "gclosure/microstructure.hpp"
#include "gclosure/poisson.hpp"

namespace gclosure {

/// Seed a multi-cell solve with a rank-one laminate of two cell states.
///
/// The macroscopic matrix must equal (1 - lambda) lower + lambda upper and
/// upper - lower must be a (x) e_axis. The seed stacks layers normal to
/// `normal_axis` (1 or 2) carrying the cell minimizers at `lower` and `upper`.
struct LaminateHint {
  Matrix lower;
  Matrix upper;
  int normal_axis = 2;
  double lambda = 0.5;
};

struct SolverOptions {
  int max_iters = 4000;
  /// Bound on max |div sigma|, the stationarity residual of the discrete problem.
  double grad_tol = 1e-8;
  int restarts = 8;
  std::uint64_t seed = 0;
  int memory = 8;
  double armijo = 1e-4;
  int max_backtracks = 50;
  /// Replaces the smoothing radius of every distance-type phase.
  std::optional<double> eps_override;
  /// Convex mixtures have a unique minimum value; run a single start.
  bool convex_single_start = true;
  int threads = 1;
  std::size_t max_pixels = std::size_t{1} << 22;
  std::optional<LaminateHint> laminate;
  /// Additional initial fields (on the solve grid), tried after the zero field.
  std::vector<VectorField> extra_seeds;

  void validate() const {
    if (max_iters < 1) throw Error("max_iters must be at least 1");
    if (!(grad_tol > 0.0)) throw Error("grad_tol must be positive");
    if (restarts < 1) throw Error("restarts must be at least 1");
    if (threads < 1) throw Error("threads must be at least 1");
  }
};

struct CellResult {
  double value = 0.0;
  VectorField minimizer;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  double residual = 0.0;
  std::vector<double> energy_trace;
  /// Final value of every start, in start order.
  std::vector<double> start_values;
};

/// Discrete mixture energy: average over pixels of W_chi(pixel, xi + D phi),
/// accumulated with correctly rounded summation.
inline double discrete_energy(const MixtureDensity& M, const Matrix& xi, const VectorField& phi) {
  if (!(phi.grid() == M.grid())) throw DimensionMismatch("field and mixture grids differ");
  const GradientField F = affine_gradient(xi, phi);
  ExactSum acc;
  for (std::size_t idx = 0; idx < F.size(); ++idx) acc.add(M.evaluate(idx, F.matrix(idx), nullptr));
  return acc.value() / static_cast<double>(F.size());
}

/// Energy functional of the cell problem on the flattened field.
class CellEnergy {
 public:
  CellEnergy(const MixtureDensity& M, const Matrix& xi)
      : M_(M), xi_(xi), flux_(static_cast<std::size_t>(2 * M.m()) * M.grid().size()) {
    if (xi.rows != M.m() || xi.cols != 2)
      throw DimensionMismatch("macroscopic matrix does not match the mixture");
  }

  double operator()(const std::vector<double>& x, std::vector<double>& g) {
    const auto& grid = M_.grid();
    const int side = grid.side();
    const std::size_t P = grid.size();
    const int m = M_.m();
    const double inv_h = grid.N();
    double total = 0.0;
    Matrix F(m, 2), sigma(m, 2);
    for (int i0 = 0; i0 < side; ++i0) {
      const std::size_t row = static_cast<std::size_t>(i0) * side;
      const std::size_t next_row = static_cast<std::size_t>((i0 + 1) % side) * side;
      for (int i1 = 0; i1 < side; ++i1) {
        const std::size_t idx = row + i1;
        const std::size_t right = row + (i1 + 1 == side ? 0 : i1 + 1);
        for (int c = 0; c < m; ++c) {
          const double* u = x.data() + c * P;
          F(c, 0) = xi_(c, 0) + (u[next_row + i1] - u[idx]) * inv_h;
          F(c, 1) = xi_(c, 1) + (u[right] - u[idx]) * inv_h;
        }
        total += M_.evaluate(idx, F, &sigma);
        for (int c = 0; c < m; ++c) {
          flux_[(2 * c) * P + idx] = sigma(c, 0);
          flux_[(2 * c + 1) * P + idx] = sigma(c, 1);
        }
      }
    }
    const double inv_p = 1.0 / static_cast<double>(P);
    for (int c = 0; c < m; ++c) {
      std::span<double> out(g.data() + c * P, P);
      gradient_adjoint(grid, {flux_.data() + 2 * c * P, P}, {flux_.data() + (2 * c + 1) * P, P},
                       out);
      for (double& v : out) v *= inv_p;
    }
    return total * inv_p;
  }

 private:
  const MixtureDensity& M_;
  Matrix xi_;
  std::vector<double> flux_;
};

namespace detail {

inline void remove_component_means(std::vector<double>& x, int m, std::size_t P) {
  for (int c = 0; c < m; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < P; ++i) s += x[c * P + i];
    const double mean = s / static_cast<double>(P);
    for (std::size_t i = 0; i < P; ++i) x[c * P + i] -= mean;
  }
}

/// The sawtooth (|y_1 - 1/2|, 0) of the unit cell, repeated on multi-cells.
inline VectorField sawtooth_field(const PeriodicGrid& grid, int m, double scale) {
  VectorField f(grid, m);
  for (int i0 = 0; i0 < grid.side(); ++i0) {
    const double y1 = static_cast<double>(i0 % grid.N()) / grid.N();
    const double v = scale * std::fabs(y1 - 0.5);
    for (int i1 = 0; i1 < grid.side(); ++i1) f.at(0, grid.index(i0, i1)) = v;
  }
  return f;
}

inline VectorField gaussian_field(const PeriodicGrid& grid, int m, double amplitude,
                                  std::uint64_t seed) {
  VectorField f(grid, m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, amplitude);
  for (double& v : f.data()) v = gauss(rng);
  return f;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RunOutcome {
  LbfgsResult lbfgs;
  std::vector<double> x;
};

inline RunOutcome run_single(const MixtureDensity& M, const Matrix& xi, const VectorField& start,
                             const SolverOptions& opts) {
  const auto& grid = M.grid();
  const std::size_t P = grid.size();
  const int m = M.m();
  CellEnergy energy(M, xi);
  PeriodicPoisson poisson(grid);
  const double h0_scale = 0.5 * static_cast<double>(P);

  LbfgsProblem prob;
  prob.objective = [&](const std::vector<double>& x, std::vector<double>& g) { return energy(x, g); };
  prob.precondition = [&](std::vector<double>& q) {
    for (int c = 0; c < m; ++c) {
      std::span<double> comp(q.data() + c * P, P);
      poisson.solve(comp, comp, h0_scale);
    }
  };
  prob.project = [&](std::vector<double>& x) { remove_component_means(x, m, P); };
  prob.residual = [&](const std::vector<double>& g) {
    double r = 0.0;
    for (double v : g) r = std::max(r, std::fabs(v));
    return r * static_cast<double>(P);
  };

  LbfgsOptions lo;
  lo.max_iters = opts.max_iters;
  lo.grad_tol = opts.grad_tol;
  lo.memory = opts.memory;
  lo.armijo = opts.armijo;
  lo.max_backtracks = opts.max_backtracks;

  RunOutcome out;
  out.x = start.data();
  out.lbfgs = minimize_lbfgs(out.x, prob, lo);
  return out;
}

inline bool needs_smoothing_check(const MixtureDensity& M) {
  for (const auto& w : M.phases())
    if (w.is_distance() && w.smoothing() == 0.0) return true;
  return false;
}

}  // namespace detail

inline CellResult solve_cell_problem(const MixtureDensity& M, const Matrix& xi,
                                     const SolverOptions& opts);

namespace detail {

/// Layered initial field for a laminate hint on the solve grid of M.
inline VectorField laminate_seed(const MixtureDensity& M, const Matrix& xi,
                                 const LaminateHint& hint, const SolverOptions& opts) {
  const auto& grid = M.grid();
  const int axis = hint.normal_axis - 1;
  if (axis != 0 && axis != 1) throw Error("laminate normal axis must be 1 or 2");
  const Matrix jump = hint.upper - hint.lower;
  for (int c = 0; c < M.m(); ++c)
    if (std::fabs(jump(c, 1 - axis)) > 1e-12)
      throw Error("laminate jump is not of the form a (x) e_normal");
  const Matrix avg = hint.lower * (1.0 - hint.lambda) + hint.upper * hint.lambda;
  if (norm(avg - xi) > 1e-10) throw Error("laminate hint does not average to the target matrix");

  // unit-cell states at the two layer matrices
  SolverOptions unit = opts;
  unit.laminate.reset();
  unit.extra_seeds.clear();
  const PeriodicGrid ug(grid.N(), 1);
  const MixtureDensity unit_mix(M.phases(), [&] {
    std::vector<int> labels(ug.size());
    for (int i0 = 0; i0 < ug.side(); ++i0)
      for (int i1 = 0; i1 < ug.side(); ++i1) labels[ug.index(i0, i1)] = M.chi().at(i0, i1);
    return PhaseMap(ug, M.chi().phases(), std::move(labels));
  }());
  const CellResult lower = solve_cell_problem(unit_mix, hint.lower, unit);
  const CellResult upper = solve_cell_problem(unit_mix, hint.upper, unit);

  const int side = grid.side();
  const int n_upper = static_cast<int>(std::lround(hint.lambda * side));
  const int n_lower = side - n_upper;
  const double lam = static_cast<double>(n_upper) / side;
  // ramp half-width in pixels
  const int w = std::max(1, std::min({grid.N() / 2, n_lower / 2, n_upper / 2}));
  std::vector<double> tent(side + 1, 0.0), blend(side, 0.0);
  for (int i = 0; i < side; ++i) {
    const double slope = i < n_lower ? -lam : 1.0 - lam;
    tent[i + 1] = tent[i] + slope / grid.N();
  }
  for (int i = 0; i < side; ++i) {
    // distance (in pixels) into the upper layer, negative inside the lower layer
    const double t = i + 0.5;
    const double into_upper = std::min(t - n_lower, static_cast<double>(side) - t);
    const double into_lower = std::min(t, n_lower - t);
    const double signed_depth = i >= n_lower ? into_upper : -into_lower;
    blend[i] = std::clamp(0.5 + signed_depth / (2.0 * w), 0.0, 1.0);
  }

  VectorField seed(grid, M.m());
  for (int i0 = 0; i0 < side; ++i0)
    for (int i1 = 0; i1 < side; ++i1) {
      const std::size_t idx = grid.index(i0, i1);
      const std::size_t uidx = ug.index(i0, i1);
      const int along = axis == 0 ? i0 : i1;
      for (int c = 0; c < M.m(); ++c) {
        const double a = jump(c, axis);
        seed.at(c, idx) = a * tent[along] + blend[along] * upper.minimizer.at(c, uidx) +
                          (1.0 - blend[along]) * lower.minimizer.at(c, uidx);
      }
    }
  seed.remove_mean();
  return seed;
}

}  // namespace detail

/// Multi-start minimisation of the discrete cell energy on the grid of M.
///
/// Starts, in order: the zero field, any laminate seed and caller seeds, the
/// sawtooth (|y_1 - 1/2|, 0) scaled by |xi|, then Gaussian fields of
/// amplitude h |xi|. The best final energy wins.
inline CellResult solve_cell_problem(const MixtureDensity& M, const Matrix& xi,
                                     const SolverOptions& opts) {
  opts.validate();
  if (M.grid().size() > opts.max_pixels) {
    std::ostringstream msg;
    msg << "grid of " << M.grid().size() << " pixels exceeds the budget of " << opts.max_pixels;
    throw Error(msg.str());
  }
  const MixtureDensity mix = opts.eps_override ? M.with_smoothing(*opts.eps_override) : M;
  if (detail::needs_smoothing_check(mix))
    throw MedialAxis("distance densities need a positive smoothing radius for minimisation");

  const auto& grid = mix.grid();
  const int m = mix.m();
  const double scale = norm(xi);

  std::vector<VectorField> starts;
  starts.emplace_back(grid, m);
  if (opts.laminate) starts.push_back(detail::laminate_seed(mix, xi, *opts.laminate, opts));
  for (const auto& s : opts.extra_seeds) {
    if (!(s.grid() == grid) || s.m() != m) throw DimensionMismatch("seed field does not match the grid");
    starts.push_back(s);
  }
  const std::size_t hinted = starts.size();
  const bool single = opts.convex_single_start && mix.is_convex();
  const std::size_t wanted =
      single ? 1 : std::max<std::size_t>(static_cast<std::size_t>(opts.restarts), hinted);
  if (starts.size() < wanted) {
    VectorField saw = detail::sawtooth_field(grid, m, scale > 0.0 ? scale : 1.0);
    saw.remove_mean();
    starts.push_back(std::move(saw));
  }
  for (std::size_t k = 0; starts.size() < wanted; ++k) {
    const double amp = grid.spacing() * (scale > 0.0 ? scale : 1.0);
    VectorField gf = detail::gaussian_field(grid, m, amp, detail::mix_seed(opts.seed, k));
    gf.remove_mean();
    starts.push_back(std::move(gf));
  }
  starts.resize(wanted, VectorField(grid, m));

  std::vector<detail::RunOutcome> runs(starts.size());
  if (opts.threads > 1 && starts.size() > 1) {
    for (std::size_t b = 0; b < starts.size(); b += opts.threads) {
      std::vector<std::future<detail::RunOutcome>> jobs;
      const std::size_t e = std::min(starts.size(), b + static_cast<std::size_t>(opts.threads));
      for (std::size_t k = b; k < e; ++k)
        jobs.push_back(std::async(std::launch::async,
                                  [&, k] { return detail::run_single(mix, xi, starts[k], opts); }));
      for (std::size_t k = b; k < e; ++k) runs[k] = jobs[k - b].get();
    }
  } else {
    for (std::size_t k = 0; k < starts.size(); ++k) runs[k] = detail::run_single(mix, xi, starts[k], opts);
  }

  CellResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    best.start_values.push_back(runs[k].lbfgs.value);
    if (runs[k].lbfgs.value < best.value) {
      best.value = runs[k].lbfgs.value;
      best_k = k;
    }
  }
  auto& win = runs[best_k];
  best.minimizer = VectorField(grid, m);
  best.minimizer.data() = std::move(win.x);
  best.minimizer.remove_mean();
  best.value = discrete_energy(mix, xi, best.minimizer);
  best.iterations = win.lbfgs.iterations;
  best.converged = win.lbfgs.converged;
  best.residual = win.lbfgs.residual;
  best.energy_trace = std::move(win.lbfgs.trace);
  best.restarts_used = static_cast<int>(runs.size());
  return best;
}

/// Cell integrand: minimum of the mixture energy over Q-periodic fluctuations.
inline CellResult cell_integrand(const MixtureDensity& M, const Matrix& xi,
                                 const SolverOptions& opts = {}) {
  if (M.grid().j() != 1) throw DimensionMismatch("cell integrand needs a unit-cell geometry");
  return solve_cell_problem(M, xi, opts);
}

struct HomEntry {
  int j = 1;
  CellResult result;
};

/// Multi-cell values: for every j the unit geometry is tiled j x j and the
/// energy average is minimised over (0,j)^2-periodic fluctuations.
///
/// Tiled minimizers of earlier entries whose j divides the current one are
/// added as starts, so values never increase along divisor chains.
inline std::vector<HomEntry> hom_integrand(const MixtureDensity& M, const Matrix& xi,
                                           const std::vector<int>& j_list,
                                           const SolverOptions& opts = {}) {
  if (M.grid().j() != 1) throw DimensionMismatch("hom integrand needs a unit-cell geometry");
  std::vector<HomEntry> out;
  for (int j : j_list) {
    if (j < 1) throw Error("cell multiplicity must be at least 1");
    const MixtureDensity Mj = M.tiled(j);
    SolverOptions oj = opts;
    const HomEntry* donor = nullptr;
    for (const auto& e : out)
      if (j % e.j == 0 && (!donor || e.result.value < donor->result.value)) donor = &e;
    if (donor) oj.extra_seeds.push_back(tile(donor->result.minimizer, j / donor->j));
    out.push_back({j, solve_cell_problem(Mj, xi, oj)});
  }
  return out;
}

/// Smallest value over the computed multiplicities.
inline double hom_estimate(const std::vector<HomEntry>& entries) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) v = std::min(v, e.result.value);
  return v;
}

struct MembershipResult {
  bool member = false;
  CellResult certificate;
};

/// Zero-set test: xi belongs to the cell set iff the cell value of the
/// squared-distance mixture built from the per-phase zero sets is <= tol.
inline MembershipResult zero_set_membership(const PhaseMap& partition,
                                            const std::vector<std::vector<Matrix>>& zero_sets,
                                            const Matrix& xi, double tol,
                                            const SolverOptions& opts = {}) {
  if (static_cast<int>(zero_sets.size()) != partition.phases())
    throw DimensionMismatch("one zero set per phase is required");
  std::vector<EnergyDensity> phases;
  const double eps = opts.eps_override.value_or(1e-3);
  for (const auto& atoms : zero_sets) {
    double r2 = 0.0;
    for (const auto& a : atoms) r2 = std::max(r2, norm2(a));
    // (|xi| - r)^2 >= |xi|^2 / 2 - r^2 and (|xi| + r)^2 <= 2 |xi|^2 + 2 r^2
    phases.push_back(EnergyDensity::dist_power(atoms, 2.0, eps, false,
                                               {0.5, r2, std::max(2.0, 2.0 * r2 + 2.0 * eps * eps)}));
  }
  MixtureDensity mix(std::move(phases), partition);
  MembershipResult out;
  out.certificate = cell_integrand(mix, xi, opts);
  out.member = out.certificate.value <= tol;
  return out;
}

struct ProbeResult {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<CellResult> results;
  /// Largest excess of a sample over the chord through its neighbours.
  double max_excess = 0.0;
  std::size_t worst_index = 0;
  double threshold = 0.0;
  bool violation = false;
};

/// Cell values along xi0 + lambda (a (x) b) and a discrete midpoint-convexity
/// test on consecutive sample triples.
inline ProbeResult rank_one_probe(const MixtureDensity& M, const Matrix& xi0, const Matrix& direction,
                                  std::vector<double> lambdas, const SolverOptions& opts = {}) {
  if (direction.rows == 2 && std::fabs(det(direction)) > 1e-12)
    throw Error("probe direction is not rank one");
  if (norm(direction) == 0.0) throw Error("probe direction is zero");
  std::sort(lambdas.begin(), lambdas.end());
  ProbeResult out;
  out.lambdas = lambdas;
  for (double l : lambdas) {
    out.results.push_back(cell_integrand(M, xi0 + direction * l, opts));
    out.values.push_back(out.results.back().value);
  }
  out.threshold = 3.0 * opts.grad_tol;
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < lambdas.size(); ++i) {
    const double t = (lambdas[i] - lambdas[i - 1]) / (lambdas[i + 1] - lambdas[i - 1]);
    const double chord = (1.0 - t) * out.values[i - 1] + t * out.values[i + 1];
    const double excess = out.values[i] - chord;
    if (excess > out.max_excess) {
      out.max_excess = excess;
      out.worst_index = i;
    }
  }
  if (lambdas.size() < 3) out.max_excess = 0.0;
  out.violation = out.max_excess > out.threshold;
  return out;
}

}  // namespace gclosure
