// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "gclosure/cell_solver.hpp"
#include "gclosure/counterexamples.hpp"
#include "gclosure/linear_cell.hpp"
#include "gclosure/twoscale.hpp"
#include "gclosure/young.hpp"

using namespace gclosure;
using namespace gclosure::named;

namespace {

// Pinned tolerances.
constexpr double kConvexRel = 1e-5;
constexpr double kLaminateAbs = 1e-8;
constexpr double kKellerAbs = 1e-3;
constexpr double kZeroTol = 1e-5;
constexpr double kPositive = 1e-3;
constexpr double kDecayFactor = 3.0;
constexpr double kExcessFactor = 10.0;
constexpr double kControlTol = 1e-5;
constexpr double kFdRel = 1e-6;
constexpr double kMeanTol = 1e-12;
constexpr double kBoundSlack = -1e-8;

// Runtime budgets in seconds.
constexpr double kBudget[10] = {0, 60, 10, 60, 900, 900, 1, 1, 1200, 120};

int failures = 0;

void criterion(int n, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= kBudget[n];
  if (!in_time) detail += "; over the " + std::to_string(static_cast<int>(kBudget[n])) + " s budget";
  ok = ok && in_time;
  failures += !ok;
  std::printf("criterion %d: %s (%.2f s) %s\n", n, ok ? "PASS" : "FAIL", secs, detail.c_str());
  std::fflush(stdout);
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Matrix iso(double a) { return Matrix::diag(a, a); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k]));
  return m;
}

std::vector<double> random_spd4(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double L[16] = {};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k <= i; ++k) L[i * 4 + k] = i == k ? 1.0 + std::fabs(u(rng)) : 0.5 * u(rng);
  std::vector<double> A(16, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      for (int r = 0; r < 4; ++r) A[i * 4 + k] += L[i * 4 + r] * L[k * 4 + r];
  return A;
}

bool convex_identity(std::string& d) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 5; ++c) {
    const MixtureDensity M(
        {EnergyDensity::quadratic(random_spd4(rng), 2, {0.1, 0.0, 20.0}),
         EnergyDensity::quadratic(random_spd4(rng), 2, {0.1, 0.0, 20.0})},
        random_with_fraction(PeriodicGrid(64), FractionVector({0.5, 0.5}), rng()));
    const Matrix xi = Matrix::from_rows(2, 2, {g(rng), g(rng), g(rng), g(rng)});
    const auto e = hom_integrand(M, xi, {1, 2, 3});
    for (const auto& h : e) {
      if (!h.result.converged) {
        d = "solver did not converge";
        return false;
      }
      worst = std::max(worst, std::fabs(h.result.value - e.front().result.value) / e.front().result.value);
    }
  }
  d = "5 mixtures, j in {1,2,3}, worst relative spread " + num(worst, 3) + " (tol " + num(kConvexRel) + ")";
  return worst <= kConvexRel;
}

bool laminate(std::string& d) {
  const ConductivityMixture M({iso(1.0), iso(2.0)}, stripe(PeriodicGrid(128), 1, 0.5));
  const Matrix A = a_cell(M).A;
  const double err = max_abs(A - Matrix::diag(1.0 / (0.5 / 1.0 + 0.5 / 2.0), 0.5 * 1.0 + 0.5 * 2.0));
  d = "A_cell = [" + num(A(0, 0), 12) + ", " + num(A(0, 1), 3) + "; " + num(A(1, 0), 3) + ", " +
      num(A(1, 1), 12) + "], max error " + num(err, 3) + " (tol " + num(kLaminateAbs) + ")";
  return err <= kLaminateAbs;
}

bool checkerboard_duality(std::string& d) {
  const PhaseMap cb = checkerboard(PeriodicGrid(256));
  const ConductivityMixture M12({iso(1.0), iso(4.0)}, cb), M21({iso(4.0), iso(1.0)}, cb);
  const Matrix S12 = a_cell_symmetrized(M12).A, S21 = a_cell_symmetrized(M21).A;
  const double keller = max_abs(S12 - iso(2.0));
  const double swap = max_abs(matmul(S12, S21) - iso(4.0));
  const Matrix F = a_cell(M12).A;
  d = "reflection-averaged |A_cell - 2 Id| = " + num(keller, 3) + ", swap identity error " +
      num(swap, 3) + " (tol " + num(kKellerAbs) + "); forward stencil det " + num(det(F), 12) +
      ", off-diagonal " + num(F(0, 1), 3);
  return keller <= kKellerAbs && swap <= kKellerAbs;
}

struct UnicoRun {
  CellResult B;
  std::vector<HomEntry> C;
  ProbeResult probe;
  SolverOptions opts;
};

const UnicoRun& unico_run() {
  static const UnicoRun run = [] {
    UnicoRun r;
    const MixtureDensity M = unico_mixture(64, UnicoVariant::PolyMax, 4.0);
    r.opts.restarts = 8;
    r.opts.seed = 1;
    r.B = cell_integrand(M, B(), r.opts);
    SolverOptions h = r.opts;
    h.laminate = LaminateHint{O(), B(), 2, 0.5};
    r.C = hom_integrand(M, C(), {1, 2, 4, 8}, h);
    r.probe = rank_one_probe(M, O(), B(), {0.0, 0.25, 0.5, 0.75, 1.0}, r.opts);
    return r;
  }();
  return run;
}

bool unico(std::string& d) {
  const UnicoRun& r = unico_run();
  const CellResult& c = r.C.front().result;
  double min_start = std::numeric_limits<double>::infinity();
  for (double v : c.start_values) min_start = std::min(min_start, v);
  const bool a = r.B.value <= kZeroTol;
  const bool b = c.value >= kPositive && c.restarts_used >= 8 && min_start >= kPositive;
  bool strict = true;
  std::string seq;
  for (std::size_t i = 0; i < r.C.size(); ++i) {
    if (i > 0) strict = strict && r.C[i].result.value < r.C[i - 1].result.value;
    seq += (i ? ", " : "") + num(r.C[i].result.value);
  }
  const bool cdec = strict && r.C.back().result.value <= c.value / kDecayFactor;
  d = "(a) W_cell(B) = " + num(r.B.value, 3) + (a ? " ok" : " FAIL") + "; (b) W_cell(C) = " +
      num(c.value) + " over " + std::to_string(c.restarts_used) + " starts" + (b ? " ok" : " FAIL") +
      "; (c) j = 1,2,4,8: " + seq + (cdec ? " ok" : " FAIL");
  return a && b && cdec;
}

bool rank_one(std::string& d) {
  const UnicoRun& r = unico_run();
  const double need = kExcessFactor * r.opts.grad_tol;
  d = "excess over chord " + num(r.probe.max_excess) + " at lambda " +
      num(r.probe.lambdas[r.probe.worst_index]) + " (need " + num(need, 3) + ")";
  return r.probe.max_excess >= need;
}

bool tartar_square_check(std::string& d) {
  const auto sq = tartar_square();
  const bool weights = sq.mass(tartar::A(1)) == Rational(8, 15) && sq.mass(tartar::A(2)) == Rational(4, 15) &&
                       sq.mass(tartar::A(3)) == Rational(2, 15) && sq.mass(tartar::A(4)) == Rational(1, 15);
  int connected = 0;
  for (int i = 1; i <= 4; ++i)
    for (int k = i + 1; k <= 4; ++k) connected += rank_one_connected(tartar::A(i), tartar::A(k));
  const RationalMatrix minus_I = RationalMatrix::diag(-1, -1);
  const bool bary = barycenter(sq) == minus_I;
  bool masses = true;
  Rational bound(1);
  for (int depth = 1; depth <= 8; ++depth) {
    bound /= 16;
    const auto lam = tartar_staircase(depth);
    lam.validate();
    const auto mu = lam.leaf_measure();
    masses = masses && barycenter(mu) == minus_I;
    for (int i = 1; i <= 4; ++i) {
      Rational diff = mu.mass(tartar::A(i)) - sq.mass(tartar::A(i));
      if (diff < 0) diff = -diff;
      masses = masses && diff <= bound;
    }
  }
  d = std::string("weights ") + (weights ? "ok" : "FAIL") + ", rank-one pairs " + std::to_string(connected) +
      "/6, barycenter " + (bary ? "exactly -I" : "FAIL") + ", staircase d <= 8 " + (masses ? "ok" : "FAIL");
  return weights && connected == 0 && bary && masses;
}

bool fraction_machinery(std::string& d) {
  std::mt19937_64 rng(7);
  const PeriodicGrid g(40);
  const double P = static_cast<double>(g.size());
  int good = 0;
  for (int c = 0; c < 20; ++c) {
    std::vector<std::size_t> want(3);
    want[0] = rng() % 800;
    want[1] = rng() % 800;
    want[2] = g.size() - want[0] - want[1];
    const FractionVector target({want[0] / P, want[1] / P, want[2] / P});
    const PhaseMap chi = random_with_fraction(g, FractionVector({0.2, 0.3, 0.5}), rng());
    const auto have = chi.counts();
    // fewest relabellings: half the l1 distance between the count vectors
    long long l1 = 0;
    for (int i = 0; i < 3; ++i) l1 += std::llabs(static_cast<long long>(have[i]) - static_cast<long long>(want[i]));
    const auto r = adjust_fraction(chi, target);
    good += r.map.counts() == want && static_cast<long long>(symmetric_difference(chi, r.map)) == l1 / 2 &&
            static_cast<long long>(r.moved) == l1 / 2;
  }
  d = std::to_string(good) + "/20 cases with exact counts and minimal symmetric difference";
  return good == 20;
}

bool dashboard(std::string& d) {
  SolverOptions opts;
  opts.laminate = LaminateHint{O(), B(), 2, 0.5};
  const auto r = determinant_gap(unico_mixture(32, UnicoVariant::PolyMax, 4.0), C(), 8, 2, 512, 4, opts);
  const auto c = determinant_gap(unico_convex_control(32), C(), 8, 2, 512, 4);
  const bool gap = r.lower_bound > kPositive && r.E_k <= r.lower_bound / kDecayFactor;
  const double control = std::fabs(c.E_k - c.lower_bound);
  d = "E_k = " + num(r.E_k) + " vs W_cell(C)/3 = " + num(r.lower_bound / kDecayFactor) +
      ", max block |avg det - det C| = " + num(r.limit_gap, 3) + "; control |E_k - W_cell| = " +
      num(control, 3) + " (tol " + num(kControlTol) + ")";
  return gap && control <= kControlTol;
}

Matrix fd_gradient(const EnergyDensity& W, const Matrix& xi) {
  const double h = 1e-5;
  Matrix out(xi.rows, 2);
  for (int k = 0; k < xi.size(); ++k) {
    Matrix a = xi, b = xi;
    a[k] += h;
    b[k] -= h;
    out[k] = (eval(W, a) - eval(W, b)) / (2 * h);
  }
  return out;
}

bool hygiene(std::string& d) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::vector<EnergyDensity> variants{
      EnergyDensity::isotropic(2.0, 1),
      EnergyDensity::quadratic(random_spd4(rng), 2, {0.1, 0.0, 20.0}),
      EnergyDensity::dist_power({O(), A()}, 4.0, 1e-3, false, distpower_growth(4.0, std::sqrt(2.0))),
      EnergyDensity::dist_power({O(), I()}, 2.0, 1e-3, true, distpower_growth(2.0, std::sqrt(2.0))),
      EnergyDensity::poly_max(O(), A(), 4.0, 1e-3, polymax_growth(4.0)),
  };
  double fd_worst = 0.0;
  for (const auto& W : variants)
    for (int s = 0; s < 100; ++s) {
      const Matrix xi = Matrix::from_rows(W.m(), 2, {g(rng), g(rng), g(rng), g(rng)});
      const Matrix a = grad(W, xi);
      fd_worst = std::max(fd_worst, norm(a - fd_gradient(W, xi)) / std::max(1.0, norm(a)));
    }

  const PeriodicGrid grid(64, 1);
  VectorField f(grid, 2);
  for (double& v : f.data()) v = g(rng);
  const double mean = max_abs(cell_average(gradient(f)));

  const auto set = p_theta_sample(iso(1.0), iso(2.0), 0.5, 50, 3, 32);
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& s : set.samples) {
    const auto b = check_bounds(s.tensor, ConductivityMixture({iso(1.0), iso(2.0)}, s.chi));
    slack = std::min({slack, b.reuss_slack, b.voigt_slack});
  }
  d = "FD relative error " + num(fd_worst, 3) + " over " + std::to_string(variants.size()) +
      " variants x 100 points; |mean grad| " + num(mean, 3) + "; " + std::to_string(set.samples.size()) +
      " geometries, worst Voigt-Reuss slack " + num(slack, 3);
  return fd_worst <= kFdRel && mean <= kMeanTol && set.samples.size() == 50 && slack >= kBoundSlack;
}

}  // namespace

int main() {
  criterion(1, convex_identity);
  criterion(2, laminate);
  criterion(3, checkerboard_duality);
  criterion(4, unico);
  criterion(5, rank_one);
  criterion(6, tartar_square_check);
  criterion(7, fraction_machinery);
  criterion(8, dashboard);
  criterion(9, hygiene);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
