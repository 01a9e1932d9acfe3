#include <gtest/gtest.h>

#include "gclosure/counterexamples.hpp"
#include "gclosure/twoscale.hpp"

using namespace gclosure;
using namespace gclosure::named;

TEST(Recovery, UnitScaleReproducesCellValue) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  const CellResult r = cell_integrand(M, C());
  const RecoveryField rf = build_recovery(r.minimizer, C(), 1, 16);
  EXPECT_EQ(recovery_energy(rf, M), discrete_energy(M, C(), r.minimizer));
  EXPECT_NEAR(recovery_energy(rf, M), r.value, 1e-12);
}

TEST(Recovery, TiledCellEnergyMatchesHomValue) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  opts.laminate = LaminateHint{O(), B(), 2, 0.5};
  const auto e = hom_integrand(M, C(), {1, 2, 4, 8}, opts);
  const RecoveryField rf = build_recovery(e.back(), C(), 2, 2 * 8 * 16);
  EXPECT_EQ(rf.j, 8);
  EXPECT_NEAR(recovery_energy(rf, M), e.back().result.value, 1e-12);
}

TEST(Recovery, SawtoothAtB) {
  const int N = 64;
  const MixtureDensity M = unico_mixture(N, UnicoVariant::PolyMax, 4.0);
  const RecoveryField rf = build_recovery(unico_field(M.grid()), B(), 4, 4 * N);
  EXPECT_LE(recovery_energy(rf, M), 1e-6);
  // the periodic part shrinks like 1/k
  double umax = 0.0;
  for (double v : rf.u.data()) umax = std::max(umax, std::fabs(v));
  EXPECT_NEAR(umax, 0.5 / 4, 1e-12);
}

TEST(Recovery, ScaleMismatch) {
  const PeriodicGrid g(8, 1);
  const VectorField phi(g, 2);
  EXPECT_THROW(build_recovery(phi, C(), 3, 16), IndivisibleScale);
  EXPECT_THROW(build_recovery(phi, C(), 0, 0), IndivisibleScale);
  const RecoveryField rf = build_recovery(phi, C(), 2, 16);
  EXPECT_THROW(block_averages(rf, 3), IndivisibleScale);
  EXPECT_THROW(determinant_gap(unico_mixture(8, UnicoVariant::PolyMax, 4.0), C(), 1, 2, 20),
               IndivisibleScale);
}

TEST(Recovery, WeakConvergenceRate) {
  // the block average of grad u_k differs from xi by boundary terms of the
  // periodic part, which is O(1/k); blocks made of whole periods are exact
  const int N = 16, blocks = 4;
  const VectorField phi = unico_field(PeriodicGrid(N, 1));
  for (int k = 1; k <= 12; ++k) {
    const RecoveryField rf = build_recovery(phi, B(), k, k * N);
    double worst = 0.0, umax = 0.0;
    for (const auto& m : block_averages(rf, blocks).gradient) worst = std::max(worst, norm(m - B()));
    for (double v : rf.u.data()) umax = std::max(umax, std::fabs(v));
    EXPECT_LE(worst, 2.0 * umax * blocks + 1e-12) << "k = " << k;
    if (k % blocks == 0) EXPECT_LE(worst, 1e-12) << "k = " << k;
  }
}

TEST(DeterminantGap, UnicoHeadline) {
  const MixtureDensity M = unico_mixture(16, UnicoVariant::PolyMax, 4.0);
  SolverOptions opts;
  opts.laminate = LaminateHint{O(), B(), 2, 0.5};
  const auto r = determinant_gap(M, C(), 8, 2, 2 * 8 * 16, 4, opts);
  EXPECT_TRUE(r.headline());
  EXPECT_LT(r.E_k, r.lower_bound / 3.0);
  EXPECT_EQ(r.det_weak_avg.size(), 16u);
  EXPECT_EQ(r.det_of_limit_avg, 0.0);
}

TEST(DeterminantGap, ConvexControlHasNoGap) {
  const MixtureDensity M = unico_convex_control(16);
  const auto r = determinant_gap(M, C(), 4, 2, 2 * 4 * 16);
  EXPECT_FALSE(r.headline());
  EXPECT_NEAR(r.E_k, r.lower_bound, 1e-8);
}
