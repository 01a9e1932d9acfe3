#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gclosure/cell_solver.hpp"
#include "gclosure/counterexamples.hpp"

using namespace gclosure;
using namespace gclosure::named;

namespace {

Matrix row(double a, double b) { return Matrix::from_rows(1, 2, {a, b, 0, 0}); }

MixtureDensity scalar_stripe(int N, double a1, double a2) {
  return MixtureDensity({EnergyDensity::isotropic(a1, 1), EnergyDensity::isotropic(a2, 1)},
                        stripe(PeriodicGrid(N), 1, 0.5));
}

/// Random two-phase quadratic mixture with symmetric positive-definite 4x4 tensors.
MixtureDensity random_quadratic(int N, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<EnergyDensity> phases;
  for (int p = 0; p < 2; ++p) {
    double L[16] = {};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k <= i; ++k) L[i * 4 + k] = i == k ? 1.0 + std::fabs(u(rng)) : 0.5 * u(rng);
    std::vector<double> A(16, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k)
        for (int r = 0; r < 4; ++r) A[i * 4 + k] += L[i * 4 + r] * L[k * 4 + r];
    phases.push_back(EnergyDensity::quadratic(A, 2, {0.1, 0.0, 20.0}));
  }
  return MixtureDensity(std::move(phases),
                        random_with_fraction(PeriodicGrid(N), FractionVector({0.5, 0.5}), seed));
}

}  // namespace

TEST(CellIntegrand, SingleConvexPhase) {
  const MixtureDensity M({EnergyDensity::isotropic(1.0, 2)}, PhaseMap(PeriodicGrid(16), 1, 1));
  const Matrix xi = Matrix::from_rows(2, 2, {0.4, -1.0, 2.0, 0.3});
  const CellResult r = cell_integrand(M, xi);
  EXPECT_NEAR(r.value, norm2(xi), 1e-12);
  EXPECT_EQ(r.restarts_used, 1);
  for (double v : r.minimizer.data()) EXPECT_LE(std::fabs(v), 1e-10);
}

TEST(CellIntegrand, ScalarLaminateMeans) {
  const MixtureDensity M = scalar_stripe(128, 1.0, 2.0);
  // 1-D layers in series: harmonic mean; in parallel: arithmetic mean
  const double harmonic = 2.0 / (1.0 / 1.0 + 1.0 / 2.0);
  const double arithmetic = (1.0 + 2.0) / 2.0;
  EXPECT_NEAR(cell_integrand(M, row(1, 0)).value, harmonic, 1e-6);
  EXPECT_NEAR(cell_integrand(M, row(0, 1)).value, arithmetic, 1e-6);
}

TEST(CellIntegrand, ResolutionConvergence) {
  const double harmonic = 4.0 / 3.0;
  const double e32 = std::fabs(cell_integrand(scalar_stripe(32, 1, 2), row(1, 0)).value - harmonic);
  const double e128 = std::fabs(cell_integrand(scalar_stripe(128, 1, 2), row(1, 0)).value - harmonic);
  EXPECT_LE(e128, 0.5 * e32 + 1e-12);
}

TEST(CellIntegrand, UnicoZeroAtB) {
  const MixtureDensity M = unico_mixture(64, UnicoVariant::PolyMax, 4.0);
  const CellResult r = cell_integrand(M, B());
  EXPECT_LE(r.value, 1e-6);
  EXPECT_TRUE(r.converged);
  // B + grad phi is A on P and I off P, up to the interface columns
  const GradientField F = affine_gradient(B(), r.minimizer);
  std::size_t hits = 0;
  for (std::size_t idx = 0; idx < F.size(); ++idx) {
    const Matrix target = M.chi()[idx] == 1 ? A() : I();
    hits += norm(F.matrix(idx) - target) < 0.05;
  }
  EXPECT_GE(hits, F.size() - 2 * 64);
}

TEST(CellIntegrand, UpperBoundByZeroField) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.7);
  SolverOptions opts;
  opts.restarts = 2;
  for (int s = 0; s < 20; ++s) {
    const Matrix xi = Matrix::from_rows(2, 2, {g(rng), g(rng), g(rng), g(rng)});
    const double zero = discrete_energy(M, xi, VectorField(M.grid(), 2));
    EXPECT_LE(cell_integrand(M, xi, opts).value, zero * (1.0 + 1e-12));
  }
}

TEST(CellIntegrand, GrowthTransfer) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  const GrowthConstants a = polymax_growth(4.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.5);
  SolverOptions opts;
  opts.restarts = 2;
  for (int s = 0; s < 6; ++s) {
    const Matrix xi = Matrix::from_rows(2, 2, {g(rng), g(rng), g(rng), g(rng)});
    const double np = std::pow(norm(xi), 4.0);
    const double v = cell_integrand(M, xi, opts).value;
    EXPECT_GE(v, a.a1 * np - a.a2);
    EXPECT_LE(v, a.a3 * (1.0 + np));
  }
}

TEST(CellIntegrand, GaugeInvariance) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  VectorField shifted(M.grid(), 2);
  for (double& v : shifted.data()) v = 0.37;
  const auto a = detail::run_single(M, C(), VectorField(M.grid(), 2), SolverOptions{});
  const auto b = detail::run_single(M, C(), shifted, SolverOptions{});
  EXPECT_EQ(a.lbfgs.value, b.lbfgs.value);
}

TEST(CellIntegrand, ReproducibleAndThreadConsistent) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  opts.seed = 42;
  const CellResult a = cell_integrand(M, C(), opts), b = cell_integrand(M, C(), opts);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.minimizer.data(), b.minimizer.data());
  opts.threads = 3;
  EXPECT_NEAR(cell_integrand(M, C(), opts).value, a.value, 1e-10);
}

TEST(CellIntegrand, RequiresUnitCellAndSmoothing) {
  const MixtureDensity M = unico_mixture(8, UnicoVariant::DistPower, 2.0, 0.0);
  EXPECT_THROW(cell_integrand(M, C()), MedialAxis);
  SolverOptions opts;
  opts.eps_override = 1e-3;
  EXPECT_NO_THROW(cell_integrand(M, C(), opts));
  EXPECT_THROW(cell_integrand(M.tiled(2), C()), DimensionMismatch);
}

TEST(HomIntegrand, FirstEntryIsCellValue) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  const auto e = hom_integrand(M, C(), {1}, opts);
  EXPECT_NEAR(e.front().result.value, cell_integrand(M, C(), opts).value, 2 * opts.grad_tol);
}

TEST(HomIntegrand, ConvexMixtureIsScaleIndependent) {
  for (unsigned seed : {1u, 2u}) {
    const MixtureDensity M = random_quadratic(16, seed);
    const Matrix xi = Matrix::from_rows(2, 2, {1.0, 0.5, -0.25, 2.0});
    const auto e = hom_integrand(M, xi, {1, 2, 3, 4});
    for (const auto& h : e)
      EXPECT_NEAR(h.result.value, e.front().result.value, 1e-5 * e.front().result.value) << "j = " << h.j;
  }
}

TEST(HomIntegrand, UnicoDecaysAtC) {
  const MixtureDensity M = unico_mixture(32, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  opts.laminate = LaminateHint{O(), B(), 2, 0.5};
  const auto e = hom_integrand(M, C(), {1, 2, 4, 8}, opts);
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i].result.value, e[i - 1].result.value);
  EXPECT_LE(e.back().result.value, e.front().result.value / 3.0);
  EXPECT_EQ(hom_estimate(e), e.back().result.value);
}

TEST(HomIntegrand, MonotoneAlongMultiples) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  opts.restarts = 3;
  const Matrix xi = Matrix::diag(0.2, 0.7);
  const auto e = hom_integrand(M, xi, {1, 2, 4}, opts);
  for (std::size_t i = 1; i < e.size(); ++i)
    EXPECT_LE(e[i].result.value, e[i - 1].result.value + 2 * opts.grad_tol);
}

TEST(Membership, UnicoZeroSet) {
  const PhaseMap P = stripe(PeriodicGrid(64), 1, 0.5);
  const std::vector<std::vector<Matrix>> Z{{O(), A()}, {O(), I()}};
  EXPECT_TRUE(zero_set_membership(P, Z, O(), 1e-4).member);
  EXPECT_TRUE(zero_set_membership(P, Z, B(), 1e-4).member);
  const auto c = zero_set_membership(P, Z, C(), 1e-4);
  EXPECT_FALSE(c.member);
  for (double v : c.certificate.start_values) EXPECT_GE(v, 1e-2);
}

TEST(RankOneProbe, ConvexPhaseHasNoViolation) {
  const MixtureDensity M({EnergyDensity::isotropic(1.0, 2)}, PhaseMap(PeriodicGrid(8), 1, 1));
  const auto pr = rank_one_probe(M, O(), B(), {0.0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_FALSE(pr.violation);
}

TEST(RankOneProbe, UnicoSegmentOB) {
  // C is the midpoint of O and B, and B - O = e2 (x) e2 is rank one
  EXPECT_EQ(O() * 0.5 + B() * 0.5, C());
  EXPECT_EQ(det(B() - O()), 0.0);
  const MixtureDensity M = unico_mixture(32, UnicoVariant::PolyMax, 4.0);
  const auto pr = rank_one_probe(M, O(), B(), {0.0, 0.5, 1.0});
  EXPECT_LE(pr.values[0], 1e-6);
  EXPECT_LE(pr.values[2], 1e-6);
  EXPECT_GT(pr.values[1], 1e-3);
  EXPECT_TRUE(pr.violation);
  EXPECT_THROW(rank_one_probe(M, O(), I(), {0.0, 1.0}), Error);
}
