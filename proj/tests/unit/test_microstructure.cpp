#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gclosure/microstructure.hpp"

using namespace gclosure;

TEST(FractionVector, RejectsBadSums) {
  EXPECT_THROW(FractionVector({0.5, 0.4}), InvalidFraction);
  EXPECT_THROW(FractionVector({1.5, -0.5}), InvalidFraction);
  EXPECT_THROW(FractionVector(std::vector<double>{}), InvalidFraction);
  EXPECT_NO_THROW(FractionVector({8.0 / 15, 4.0 / 15, 2.0 / 15, 1.0 / 15}));
}

TEST(PhaseMap, RejectsBadLabels) {
  const PeriodicGrid g(2);
  EXPECT_THROW(PhaseMap(g, 2, std::vector<int>{1, 2, 3, 1}), FormatError);
  EXPECT_THROW(PhaseMap(g, 2, std::vector<int>{1, 2}), DimensionMismatch);
}

TEST(Stripe, HalfCellCounts) {
  const PhaseMap s = stripe(PeriodicGrid(64), 1, 0.5);
  EXPECT_EQ(s.counts(), (std::vector<std::size_t>{2048, 2048}));
  EXPECT_EQ(s.at(31, 0), 1);
  EXPECT_EQ(s.at(32, 63), 2);
  const PhaseMap t = stripe(PeriodicGrid(64), 2, 0.25);
  EXPECT_EQ(t.at(0, 15), 1);
  EXPECT_EQ(t.at(0, 16), 2);
}

TEST(Stripe, NonIntegralFraction) {
  EXPECT_THROW(stripe(PeriodicGrid(64), 1, 1.0 / 3.0), NonIntegralFraction);
  EXPECT_THROW(stripe(PeriodicGrid(64), 3, 0.5), DimensionMismatch);
}

TEST(Fractions, OfStripe) {
  const auto f = fractions(stripe(PeriodicGrid(16), 1, 0.5));
  EXPECT_EQ(f[0], 0.5);
  EXPECT_EQ(f[1], 0.5);
}

TEST(RandomWithFraction, ExactCounts) {
  const PhaseMap a = random_with_fraction(PeriodicGrid(64), FractionVector({0.25, 0.75}), 1);
  EXPECT_EQ(a.counts(), (std::vector<std::size_t>{1024, 3072}));
  const PhaseMap b =
      random_with_fraction(PeriodicGrid(60), FractionVector({8.0 / 15, 4.0 / 15, 2.0 / 15, 1.0 / 15}), 2);
  EXPECT_EQ(b.counts(), (std::vector<std::size_t>{1920, 960, 480, 240}));
}

TEST(RandomWithFraction, DeterministicPerSeed) {
  const FractionVector th({0.3, 0.7});
  const PeriodicGrid g(32);
  EXPECT_EQ(random_with_fraction(g, th, 9), random_with_fraction(g, th, 9));
  EXPECT_FALSE(random_with_fraction(g, th, 9) == random_with_fraction(g, th, 10));
}

TEST(LargestRemainder, SumsExactly) {
  const auto c = largest_remainder_counts(FractionVector({1.0 / 3, 1.0 / 3, 1.0 / 3}), 100);
  EXPECT_EQ(c, (std::vector<std::size_t>{34, 33, 33}));
}

TEST(Checkerboard, Layout) {
  const PhaseMap c = checkerboard(PeriodicGrid(8), 2);
  EXPECT_EQ(c.at(0, 0), 1);
  EXPECT_EQ(c.at(0, 4), 2);
  EXPECT_EQ(c.at(4, 4), 1);
  EXPECT_EQ(c.counts(), (std::vector<std::size_t>{32, 32}));
  EXPECT_THROW(checkerboard(PeriodicGrid(8), 3), IndivisibleScale);
}

TEST(AdjustFraction, IdentityAtTarget) {
  const PhaseMap s = stripe(PeriodicGrid(32), 1, 0.5);
  const auto r = adjust_fraction(s, FractionVector({0.5, 0.5}));
  EXPECT_EQ(r.moved, 0u);
  EXPECT_EQ(r.map, s);
}

TEST(AdjustFraction, StripeToThreeEighths) {
  const PhaseMap s = stripe(PeriodicGrid(64), 1, 0.5);
  const auto r = adjust_fraction(s, FractionVector({3.0 / 8, 5.0 / 8}));
  // |1/2 - 3/8| * 4096
  EXPECT_EQ(r.moved, 512u);
  EXPECT_EQ(symmetric_difference(s, r.map), 512u);
  EXPECT_EQ(r.map.counts(), (std::vector<std::size_t>{1536, 2560}));
}

TEST(AdjustFraction, ClosedFormOnRandomCases) {
  std::mt19937_64 rng(4);
  const PeriodicGrid g(40);
  const double P = static_cast<double>(g.size());
  for (int c = 0; c < 20; ++c) {
    // integral targets so that the closed form needs no rounding
    std::vector<std::size_t> want(3);
    want[0] = rng() % 800;
    want[1] = rng() % 800;
    want[2] = g.size() - want[0] - want[1];
    const FractionVector target({want[0] / P, want[1] / P, want[2] / P});
    const PhaseMap chi = random_with_fraction(g, FractionVector({0.2, 0.3, 0.5}), rng());
    const auto have = chi.counts();
    double l1 = 0.0;
    for (int i = 0; i < 3; ++i) l1 += std::fabs(have[i] / P - target[i]);
    const auto expected = static_cast<std::size_t>(std::llround(P * l1 / 2.0));
    const auto r = adjust_fraction(chi, target);
    EXPECT_EQ(r.map.counts(), want);
    EXPECT_EQ(r.moved, expected);
    EXPECT_EQ(symmetric_difference(chi, r.map), expected);
    // idempotent at target
    EXPECT_EQ(adjust_fraction(r.map, target).moved, 0u);
  }
}

TEST(AdjustFraction, SweepStartsAtCorner) {
  const PhaseMap s = stripe(PeriodicGrid(8), 1, 0.5);
  const auto r = adjust_fraction(s, FractionVector({31.0 / 64, 33.0 / 64}));
  EXPECT_EQ(r.moved, 1u);
  EXPECT_EQ(r.map.at(0, 0), 2);
}

TEST(Oscillate, IdentityAtKOne) {
  const PhaseMap c = random_with_fraction(PeriodicGrid(16), FractionVector({0.5, 0.5}), 3);
  EXPECT_EQ(oscillate(c, 1), c);
}

TEST(Oscillate, StripeBecomesAlternatingStripes) {
  const PhaseMap s = stripe(PeriodicGrid(64), 1, 0.5);
  const PhaseMap s2 = oscillate(s, 2);
  for (int i0 = 0; i0 < 64; ++i0) EXPECT_EQ(s2.at(i0, 7), (i0 / 16) % 2 == 0 ? 1 : 2);
  const PhaseMap s4 = oscillate(s, 4);
  for (int i0 = 0; i0 < 64; ++i0) EXPECT_EQ(s4.at(i0, 0), (i0 / 8) % 2 == 0 ? 1 : 2);
  EXPECT_EQ(s4.counts(), s.counts());
}

TEST(Oscillate, PreservesFractions) {
  const PhaseMap c =
      random_with_fraction(PeriodicGrid(48), FractionVector({0.1, 0.2, 0.7}), 5);
  for (int k : {2, 3, 4, 6, 8, 12, 16, 24, 48}) EXPECT_EQ(oscillate(c, k).counts(), c.counts());
  EXPECT_THROW(oscillate(c, 5), IndivisibleScale);
}

TEST(Tile, RepeatsCell) {
  const PhaseMap c = checkerboard(PeriodicGrid(4), 2);
  const PhaseMap t = tile(c, 3);
  EXPECT_EQ(t.grid().side(), 12);
  for (int i0 = 0; i0 < 12; ++i0)
    for (int i1 = 0; i1 < 12; ++i1) EXPECT_EQ(t.at(i0, i1), c.at(i0 % 4, i1 % 4));
}

TEST(PhaseMapFile, RoundTrip) {
  const PhaseMap c = random_with_fraction(PeriodicGrid(6, 2), FractionVector({0.25, 0.25, 0.5}), 8);
  std::stringstream ss;
  write_phasemap(ss, c);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "gclosure-phasemap v1 n=2 N=6 j=2 phases=3");
  EXPECT_EQ(read_phasemap(ss), c);
}

TEST(PhaseMapFile, RejectsMalformed) {
  std::stringstream a("not-a-map v1\n");
  EXPECT_THROW(read_phasemap(a), FormatError);
  std::stringstream b("gclosure-phasemap v1 n=2 N=2 j=1 phases=2\n1 2\n2\n");
  EXPECT_THROW(read_phasemap(b), FormatError);
}
