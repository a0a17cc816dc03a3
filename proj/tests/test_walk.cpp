#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tsaw/error.hpp"
#include "tsaw/path_chains.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/stats.hpp"
#include "tsaw/tree.hpp"
#include "tsaw/walk.hpp"

using namespace tsaw;
using namespace tsaw::walk;
using tree::GrowthSpec;
using tree::RootedTree;

namespace {

RootedTree path(int depth) { return tree::build_spherical_tree(GrowthSpec::from_exponent(0.0, depth)); }

double r_exact(int n) {
  chains::ChainOptions o;
  return chains::ruin_series(n, o).r[static_cast<std::size_t>(n)];
}

}  // namespace

TEST(WeightFunction, ExponentialDecay) {
  const WeightFunction w(0.8);
  EXPECT_DOUBLE_EQ(w(0), 1.0);
  for (std::uint64_t n = 0; n < 50; ++n) {
    EXPECT_LT(w(n + 1), w(n));
    EXPECT_NEAR(w(n + 1) / w(n), std::exp(-0.8), 1e-14);
  }
  EXPECT_THROW(WeightFunction(0.0), ValidationError);
}

TEST(StepDirect, SingleNeighbourIsForced) {
  const auto t = path(5);
  WalkState s(t);
  const WeightFunction w(1.0);
  const auto law = transition_law(s, t, w);
  ASSERT_EQ(law.size(), 1u);
  EXPECT_EQ(law[0].first, 1);
  EXPECT_DOUBLE_EQ(law[0].second, 1.0);
  Rng rng(1);
  EXPECT_EQ(step_direct(s, t, w, rng), 1);
}

TEST(StepDirect, FreshStarIsUniform) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_sizes({1, 5, 5}));
  WalkState s(t);
  const auto law = transition_law(s, t, WeightFunction(1.0));
  ASSERT_EQ(law.size(), 5u);
  for (const auto& [v, p] : law) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(StepDirect, PathSecondStepFavoursFreshEdge) {
  const auto t = path(5);
  WalkState s(t);
  advance(s, t, 1);
  const auto law = transition_law(s, t, WeightFunction(1.0));
  ASSERT_EQ(law.size(), 2u);
  EXPECT_EQ(law[1].first, 2);
  EXPECT_NEAR(law[1].second, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(law[1].second, 0.7311, 1e-4);
}

TEST(StepDirect, EscapeFromCapLeafIsSignalled) {
  const auto t = path(2);
  WalkState s(t);
  advance(s, t, 1);
  advance(s, t, 2);
  Rng rng(1);
  EXPECT_THROW(step_direct(s, t, WeightFunction(1.0), rng), TruncationEscape);
}

TEST(StepDirect, ParityAndStepCountHoldAlongATrajectory) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(1.0, 400));
  const WeightFunction w(1.0);
  WalkState s(t);
  Rng rng(12);
  for (int i = 0; i < 20000 && t.level(s.current) < t.depth(); ++i) {
    step_direct(s, t, w, rng);
    ASSERT_TRUE(parity_holds(s, t)) << "step " << i;
  }
  std::uint64_t total = 0;
  for (VertexId c = 1; c < static_cast<VertexId>(t.size()); ++c) total += s.local_times.total(c);
  EXPECT_EQ(total, s.steps);
}

TEST(StepRubin, SingleNeighbourIgnoresClocks) {
  const auto t = path(5);
  ClockStore clocks(t, 1.0, 3);
  clocks.preset(0, 1, 0, 1e9);
  WalkState s(t);
  EXPECT_EQ(step_rubin(s, clocks, t), 1);
}

TEST(StepRubin, SmallerInjectedClockWins) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_sizes({1, 2, 2}));
  const VertexId a = t.children(0)[0], b = t.children(0)[1];
  for (bool a_first : {true, false}) {
    ClockStore clocks(t, 1.0, 5);
    clocks.preset(0, a, 0, a_first ? 0.2 : 0.9);
    clocks.preset(0, b, 0, a_first ? 0.9 : 0.2);
    WalkState s(t);
    EXPECT_EQ(step_rubin(s, clocks, t), a_first ? a : b);
  }
}

TEST(StepRubin, ConditionalFrequenciesMatchTransitionLaw) {
  // root - v - {a, b}, each with one child. Condition on the prefix v, a, v and
  // look at the next move from v, where the three edge weights all differ.
  const auto t = RootedTree::from_parents({tree::kNoVertex, 0, 1, 1, 2, 3});
  const VertexId v = 1, a = 2;
  const WeightFunction w(1.0);
  WalkState ref(t);
  advance(ref, t, v);
  advance(ref, t, a);
  advance(ref, t, v);
  const auto law = transition_law(ref, t, w);
  std::map<VertexId, std::uint64_t> counts;
  std::uint64_t hits = 0;
  for (std::uint64_t rep = 0; rep < 100000; ++rep) {
    ClockStore clocks(t, 1.0, derive_replica_seed(77, rep));
    WalkState s(t);
    if (step_rubin(s, clocks, t) != v || step_rubin(s, clocks, t) != a || step_rubin(s, clocks, t) != v) continue;
    ++hits;
    ++counts[step_rubin(s, clocks, t)];
  }
  ASSERT_GT(hits, 5000u);
  for (const auto& [y, p] : law) {
    const double f = static_cast<double>(counts[y]) / static_cast<double>(hits);
    EXPECT_LT(std::fabs(f - p), 4.0 * stats::binomial_se(p, static_cast<double>(hits))) << "y=" << y;
  }
}

TEST(ClockStore, MemoizedAndIncreasing) {
  const auto t = path(10);
  ClockStore c(t, 1.0, 9);
  const double x = c.clock(3, 4, 2);
  EXPECT_GT(x, 0.0);
  EXPECT_EQ(c.clock(3, 4, 2), x);
  double prev = -INFINITY;
  for (std::uint32_t k = 0; k < 30; ++k) {
    const double s = c.log_partial_sum(3, 4, k);
    EXPECT_GT(s, prev);
    prev = s;
  }
  ClockStore d(t, 1.0, 9);
  EXPECT_EQ(d.log_partial_sum(3, 4, 17), c.log_partial_sum(3, 4, 17));
}

TEST(Excursion, OneEdgeTruncationStopsAtTheCap) {
  // On a one-edge truncation the child is a depth leaf, so the excursion is
  // level-capped after its first step rather than reflected.
  const auto t = path(1);
  Rng rng(1);
  const auto rec = run_excursion(t, WeightFunction(1.0), {}, rng);
  EXPECT_EQ(rec.outcome, ExcursionOutcome::level_capped);
  EXPECT_EQ(rec.steps, 1u);
  EXPECT_EQ(rec.crossings(1), 1u);
}

TEST(Excursion, NaturalLeafReflects) {
  // Vertex 1 is a leaf above the truncation depth: the walk bounces back.
  const auto t = RootedTree::from_parents({tree::kNoVertex, 0, 0, 2});
  ClockStore clocks(t, 1.0, 1);
  clocks.preset(0, 1, 0, 0.01);
  const auto rec = run_excursion(t, WeightFunction(1.0), {}, clocks);
  EXPECT_EQ(rec.outcome, ExcursionOutcome::returned);
  EXPECT_EQ(rec.steps, 2u);
  EXPECT_EQ(rec.crossings(1), 1u);
}

TEST(Excursion, CrossedEdgesAreConnectedThroughTheRoot) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(0.7, 40));
  const WeightFunction w(1.0);
  ExcursionRunner runner(t, w);
  for (std::uint64_t rep = 0; rep < 2000; ++rep) {
    Rng rng(derive_replica_seed(5, rep));
    const auto rec = runner.run({}, rng);
    ASSERT_FALSE(rec.downward.empty());
    for (const auto& [c, n] : rec.downward) {
      ASSERT_GE(n, 1u);
      if (t.level(c) > 1) {
        ASSERT_GE(rec.crossings(t.parent(c)), 1u) << "rep " << rep;
      }
    }
  }
}

TEST(Excursion, PathLevelHundredMatchesExactRuin) {
  const auto t = path(200);
  const WeightFunction w(1.0);
  ExcursionRunner runner(t, w);
  const std::uint64_t reps = 100000;
  std::uint64_t open = 0, capped = 0;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    Rng rng(derive_replica_seed(21, rep));
    const auto rec = runner.run({10'000'000, 1 << 30}, rng);
    if (rec.outcome == ExcursionOutcome::step_capped) ++capped;
    if (rec.crossings(100) >= 1) ++open;
  }
  EXPECT_EQ(capped, 0u);
  const double p = static_cast<double>(open) / reps, r = r_exact(100);
  EXPECT_LT(std::fabs(p - r), 4.0 * stats::binomial_se(r, reps)) << p << " vs " << r;
}

TEST(Excursion, EnginesAgreeOnShallowOpenEdges) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4, 8, 16}));
  const WeightFunction w(1.0);
  const std::uint64_t reps = 100000;
  std::vector<double> fd(t.size(), 0.0), fr(t.size(), 0.0);
  std::map<std::uint64_t, double> pd, pr;
  ExcursionRunner a(t, w), b(t, w);
  ClockStore clocks(t, 1.0, 0);
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    Rng rng(derive_replica_seed(31, rep));
    clocks.reset(derive_replica_seed(32, rep));
    const auto rd = a.run({}, rng);
    const auto rr = b.run({}, clocks);
    std::uint64_t md = 0, mr = 0;
    for (VertexId c = 1; c < static_cast<VertexId>(t.size()); ++c) {
      if (t.level(c) > 3) continue;
      if (rd.crossings(c)) fd[static_cast<std::size_t>(c)] += 1, md |= 1ULL << c;
      if (rr.crossings(c)) fr[static_cast<std::size_t>(c)] += 1, mr |= 1ULL << c;
    }
    pd[md] += 1;
    pr[mr] += 1;
  }
  for (VertexId c = 1; c < static_cast<VertexId>(t.size()); ++c) {
    if (t.level(c) > 3) continue;
    const double p1 = fd[static_cast<std::size_t>(c)] / reps, p2 = fr[static_cast<std::size_t>(c)] / reps;
    const double se = std::hypot(stats::binomial_se(p1, reps), stats::binomial_se(p2, reps));
    EXPECT_LT(std::fabs(p1 - p2), 4.0 * se) << "edge " << c;
  }
  for (const auto& [mask, n] : pd) {
    if (n < 2000) continue;
    const double p1 = n / reps, p2 = pr[mask] / reps;
    const double se = std::hypot(stats::binomial_se(p1, reps), stats::binomial_se(p2, reps));
    EXPECT_LT(std::fabs(p1 - p2), 4.0 * se) << "pattern " << mask;
  }
}

TEST(Excursion, ReplayIsBitIdentical) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(0.7, 60));
  const WeightFunction w(1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ClockStore c1(t, 1.0, seed), c2(t, 1.0, seed);
    const auto a = run_excursion(t, w, {}, c1), b = run_excursion(t, w, {}, c2);
    EXPECT_EQ(a.steps, b.steps);
    EXPECT_EQ(a.downward, b.downward);
    Rng r1(seed), r2(seed);
    const auto x = run_excursion(t, w, {}, r1), y = run_excursion(t, w, {}, r2);
    EXPECT_EQ(x.steps, y.steps);
    EXPECT_EQ(x.downward, y.downward);
  }
}

TEST(Extension, LevelOneAlwaysHits) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(0.7, 10));
  for (std::uint64_t s = 0; s < 100; ++s) {
    ClockStore clocks(t, 1.0, s);
    for (VertexId v : t.level_vertices(1)) EXPECT_EQ(run_extension(v, clocks, t), ExtensionOutcome::hit);
  }
}

TEST(Extension, LevelTwoHitsWithProbabilityRTwo) {
  const auto t = path(5);
  const std::uint64_t reps = 100000;
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < reps; ++s) {
    ClockStore clocks(t, 1.0, derive_replica_seed(8, s));
    hits += run_extension(2, clocks, t) == ExtensionOutcome::hit;
  }
  const double p = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_LT(std::fabs(static_cast<double>(hits) / reps - p), 4.0 * stats::binomial_se(p, reps));
}

TEST(Extension, CoincidesWithRestrictionWhileOnTheGeodesic) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(0.7, 30));
  const VertexId v = t.level_vertices(12).back();
  const auto geo = t.geodesic(v);
  std::uint64_t compared = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    ClockStore clocks(t, 1.0, derive_replica_seed(40, seed));
    ExtensionWalk ext(t, v, clocks);
    WalkState s(t);
    for (int i = 0; i < 10000; ++i) {
      if (t.is_cap_leaf(s.current)) break;
      const VertexId y = step_rubin(s, clocks, t);
      if (std::find(geo.begin(), geo.end(), y) == geo.end()) break;
      ext.step();
      ASSERT_EQ(ext.position(), y) << "seed " << seed << " step " << i;
      ++compared;
    }
  }
  EXPECT_GT(compared, 1000u);
}

TEST(RunWalk, SingleStepFromRoot) {
  const auto t = tree::build_spherical_tree(GrowthSpec::from_exponent(0.5, 10));
  Rng rng(1);
  const auto st = run_walk(t, WeightFunction(1.0), 1, rng);
  EXPECT_EQ(st.returns, 0u);
  EXPECT_EQ(st.final_level, 1);
}

TEST(RunWalk, PathReturnsGrowWithTime) {
  const auto t = path(100000);
  std::vector<double> mean;
  for (std::uint64_t T : {1000u, 10000u, 100000u}) {
    double total = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
      Rng rng(derive_replica_seed(T, rep));
      total += static_cast<double>(run_walk(t, WeightFunction(1.0), T, rng).returns);
    }
    mean.push_back(total / 50);
  }
  EXPECT_LT(mean[0], mean[1]);
  EXPECT_LT(mean[1], mean[2]);
}
