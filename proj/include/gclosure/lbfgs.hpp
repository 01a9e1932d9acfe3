#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace gclosure {

struct LbfgsOptions {
  int max_iters = 5000;
  /// Stop when the caller's residual measure of the gradient drops below this.
  double grad_tol = 1e-8;
  int memory = 8;
  double armijo = 1e-4;
  int max_backtracks = 50;
  /// Stop after this many consecutive iterations with relative decrease
  /// below `stall_rtol`.
  int stall_window = 25;
  double stall_rtol = 1e-14;
  /// Relative energy noise tolerated by the approximate Armijo test.
  double roundoff = 1e-13;
};

struct LbfgsResult {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Callbacks describing the problem; all vectors have the same length.
struct LbfgsProblem {
  /// Returns f(x) and writes the gradient.
  std::function<double(const std::vector<double>&, std::vector<double>&)> objective;
  /// Initial inverse-Hessian approximation applied in place.
  std::function<void(std::vector<double>&)> precondition;
  /// Gauge projection applied to every accepted iterate.
  std::function<void(std::vector<double>&)> project;
  /// Scalar stationarity measure compared against grad_tol.
  std::function<double(const std::vector<double>&)> residual;
};

namespace detail {
inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace detail

/// Preconditioned limited-memory BFGS with Armijo backtracking.
///
/// The curvature pair is skipped when s.y is not positive, and the memory is
/// flushed when the two-loop direction fails to descend or the line search
/// fails, falling back to a preconditioned gradient step.
inline LbfgsResult minimize_lbfgs(std::vector<double>& x, const LbfgsProblem& prob,
                                  const LbfgsOptions& opts) {
  using detail::dotv;
  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> mem;
  double gamma = 1.0;

  const std::size_t n = x.size();
  if (prob.project) prob.project(x);
  std::vector<double> g(n), d(n), xn(n), gn(n), q(n);
  double fx = prob.objective(x, g);

  LbfgsResult res;
  res.trace.push_back(fx);
  int stall = 0;
  double best_residual = std::numeric_limits<double>::infinity();

  auto direction = [&](bool use_memory) {
    q = g;
    std::vector<double> alpha(mem.size());
    if (use_memory)
      for (std::size_t k = mem.size(); k-- > 0;) {
        alpha[k] = mem[k].rho * dotv(mem[k].s, q);
        for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * mem[k].y[i];
      }
    if (prob.precondition) prob.precondition(q);
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    if (use_memory) {
      for (std::size_t k = 0; k < mem.size(); ++k) {
        const double beta = mem[k].rho * dotv(mem[k].y, q);
        for (std::size_t i = 0; i < n; ++i) q[i] += (alpha[k] - beta) * mem[k].s[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
  };

  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    res.residual = prob.residual ? prob.residual(g) : std::sqrt(dotv(g, g));
    if (res.residual <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    bool use_memory = !mem.empty();
    direction(use_memory);
    double slope = dotv(g, d);
    if (!(slope < 0.0)) {
      mem.clear();
      use_memory = false;
      direction(false);
      slope = dotv(g, d);
      if (!(slope < 0.0)) break;
    }

    double fn = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      for (int bt = 0; bt < opts.max_backtracks; ++bt, t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
        if (prob.project) prob.project(xn);
        fn = prob.objective(xn, gn);
        if (!std::isfinite(fn)) continue;
        if (fn <= fx + opts.armijo * t * slope) {
          accepted = true;
          break;
        }
        // approximate Armijo (Hager-Zhang): near convergence f differences
        // drown in rounding, so judge the step by the new directional slope
        if (fn <= fx + opts.roundoff * std::fabs(fx) &&
            dotv(gn, d) <= (2.0 * opts.armijo - 1.0) * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted && use_memory) {
        mem.clear();
        use_memory = false;
        direction(false);
        slope = dotv(g, d);
        if (!(slope < 0.0)) break;
      } else {
        break;
      }
    }
    if (!accepted) break;

    Pair pr{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pr.s[i] = xn[i] - x[i];
      pr.y[i] = gn[i] - g[i];
    }
    const double sy = dotv(pr.s, pr.y);
    if (sy > 1e-300) {
      q = pr.y;
      if (prob.precondition) prob.precondition(q);
      const double yhy = dotv(pr.y, q);
      gamma = yhy > 0.0 ? sy / yhy : 1.0;
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }

    const double decrease = fx - fn;
    const double rn = prob.residual ? prob.residual(gn) : std::sqrt(dotv(gn, gn));
    const bool progress = decrease > opts.stall_rtol * std::fabs(fx) || rn < 0.999 * best_residual;
    best_residual = std::min(best_residual, rn);
    stall = progress ? 0 : stall + 1;
    x.swap(xn);
    g.swap(gn);
    fx = fn;
    res.trace.push_back(fx);
    if (stall >= opts.stall_window) {
      ++res.iterations;
      break;
    }
  }
  res.residual = prob.residual ? prob.residual(g) : std::sqrt(dotv(g, g));
  if (res.residual <= opts.grad_tol) res.converged = true;
  res.value = fx;
  return res;
}

}  // namespace gclosure
