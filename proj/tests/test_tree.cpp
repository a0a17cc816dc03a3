#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "tsaw/error.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/tree.hpp"
#include "tsaw/tree_io.hpp"

using namespace tsaw;
using namespace tsaw::tree;

namespace {

// Subset enumeration: minimum of cutset_value over every edge set that is a cutset.
double brute_force_min(const RootedTree& t, double gamma) {
  const std::size_t edges = t.size() - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << edges); ++mask) {
    Cutset c;
    for (std::size_t i = 0; i < edges; ++i)
      if (mask >> i & 1) c.edges.push_back({static_cast<VertexId>(i + 1)});
    if (!is_valid_cutset(t, c)) continue;
    best = std::min(best, cutset_value(t, c, gamma));
  }
  return best;
}

RootedTree random_small_tree(std::uint64_t seed, std::size_t max_edges) {
  Rng rng(seed);
  std::vector<VertexId> parents{kNoVertex};
  std::vector<int> level{0};
  while (parents.size() <= max_edges) {
    const auto p = static_cast<VertexId>(rng.next() % parents.size());
    if (level[static_cast<std::size_t>(p)] >= 5) continue;
    parents.push_back(p);
    level.push_back(level[static_cast<std::size_t>(p)] + 1);
  }
  return RootedTree::from_parents(parents);
}

}  // namespace

TEST(SphericalTree, ExponentZeroIsAPath) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.0, 10));
  EXPECT_EQ(t.size(), 11u);
  EXPECT_EQ(t.depth(), 10);
  for (auto s : t.level_sizes()) EXPECT_EQ(s, 1u);
}

TEST(SphericalTree, DoublingSizesGiveBinaryTree) {
  const auto t = build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4, 8}));
  EXPECT_EQ(t.depth(), 3);
  for (int n = 0; n < 3; ++n)
    for (VertexId v : t.level_vertices(n)) EXPECT_EQ(t.children(v).size(), 2u);
}

TEST(SphericalTree, LevelSizesMatchTargetsExactly) {
  for (double b : {0.3, 0.7, 1.0, 1.5}) {
    const auto spec = GrowthSpec::from_exponent(b, 120);
    const auto t = build_spherical_tree(spec);
    EXPECT_EQ(t.level_sizes(), spec.targets()) << "b=" << b;
    for (int n = 0; n <= 120; ++n)
      EXPECT_EQ(spec.targets()[static_cast<std::size_t>(n)],
                std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(n + 1.0, b)))));
  }
}

TEST(SphericalTree, ExponentOneCountsAndLevelCutset) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(1.0, 100));
  for (int n = 1; n <= 100; ++n) {
    ASSERT_EQ(t.level_vertices(n).size(), static_cast<std::size_t>(n + 1));
    const auto c = level_cutset(t, n);
    EXPECT_NEAR(cutset_value(t, c, 0.5), (n + 1) / std::sqrt(static_cast<double>(n)), 1e-10);
  }
}

TEST(SphericalTree, ChildCountsDifferByAtMostOnePerLevel) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.7, 200));
  for (int n = 0; n < t.depth(); ++n) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (VertexId v : t.level_vertices(n)) {
      lo = std::min(lo, t.children(v).size());
      hi = std::max(hi, t.children(v).size());
    }
    EXPECT_LE(hi - lo, 1u) << "level " << n;
    EXPECT_GE(lo, 1u);
  }
}

TEST(SphericalTree, BranchingIsSpreadAcrossLineages) {
  // With all extra children on the lowest ids, one level-10 vertex would own
  // nearly every deep vertex.
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(1.0, 100));
  std::map<VertexId, int> owner;
  for (VertexId v : t.level_vertices(100)) {
    VertexId a = v;
    while (t.level(a) > 10) a = t.parent(a);
    ++owner[a];
  }
  int largest = 0;
  for (const auto& [a, c] : owner) largest = std::max(largest, c);
  EXPECT_LT(largest, 101 / 2);
}

TEST(SphericalTree, DeterministicConstruction) {
  const auto a = build_spherical_tree(GrowthSpec::from_exponent(0.7, 80));
  const auto b = build_spherical_tree(GrowthSpec::from_exponent(0.7, 80));
  ASSERT_EQ(a.size(), b.size());
  for (VertexId v = 1; v < static_cast<VertexId>(a.size()); ++v) EXPECT_EQ(a.parent(v), b.parent(v));
}

TEST(SphericalTree, RejectsInvalidSpecs) {
  EXPECT_THROW(build_spherical_tree(GrowthSpec::from_exponent(0.5, 0)), ValidationError);
  EXPECT_THROW(build_spherical_tree(GrowthSpec::from_sizes({1, 3, 2})), ValidationError);
  EXPECT_THROW(build_spherical_tree(GrowthSpec::from_sizes({1, 0})), ValidationError);
}

TEST(RootedTree, StructuralInvariants) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.9, 50));
  EXPECT_EQ(t.level(t.root()), 0);
  for (VertexId v = 1; v < static_cast<VertexId>(t.size()); ++v) {
    EXPECT_LT(t.parent(v), v);
    EXPECT_EQ(t.level(v), t.level(t.parent(v)) + 1);
    const auto g = t.geodesic(v);
    EXPECT_EQ(g.front(), t.root());
    EXPECT_EQ(g.back(), v);
    EXPECT_EQ(static_cast<int>(g.size()), t.level(v) + 1);
  }
  EXPECT_THROW(RootedTree::from_parents({kNoVertex, 2, 0}), ValidationError);
}

TEST(Cutset, PathSingleEdge) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.0, 10));
  for (int n = 1; n <= 10; ++n) EXPECT_DOUBLE_EQ(cutset_value(t, level_cutset(t, n), 1.0), 1.0 / n);
}

TEST(Cutset, BinaryLevelCutset) {
  const auto t = build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4, 8, 16, 32}));
  for (int n = 1; n <= 5; ++n) EXPECT_NEAR(cutset_value(t, level_cutset(t, n), 1.0), std::pow(2.0, n) / n, 1e-12);
}

TEST(Cutset, NonCutsetIsRejected) {
  const auto t = build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4}));
  Cutset half;
  half.edges.push_back({1});
  EXPECT_FALSE(is_valid_cutset(t, half));
  EXPECT_THROW(cutset_value(t, half, 1.0), ValidationError);
  Cutset doubled = level_cutset(t, 1);
  doubled.edges.push_back(EdgeRef{t.children(1)[0]});
  EXPECT_FALSE(is_valid_cutset(t, doubled));
}

TEST(MinCut, PathValueIsDeepestEdge) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.0, 25));
  const auto mc = min_cutset_value(t, 1.0);
  EXPECT_NEAR(mc.value, 1.0 / 25.0, 1e-15);
  ASSERT_EQ(mc.cut.edges.size(), 1u);
  EXPECT_EQ(edge_level(t, mc.cut.edges[0]), 25);
}

TEST(MinCut, BinaryDepthTenIsTwo) {
  std::vector<std::size_t> sizes{1};
  for (int n = 1; n <= 10; ++n) sizes.push_back(sizes.back() * 2);
  const auto t = build_spherical_tree(GrowthSpec::from_sizes(sizes));
  EXPECT_NEAR(min_cutset_value(t, 1.0).value, 2.0, 1e-12);
}

TEST(MinCut, MatchesBruteForceOnSmallTrees) {
  const auto binary = build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4, 8}));
  for (double g : {0.5, 1.0, 2.0}) EXPECT_NEAR(min_cutset_value(binary, g).value, brute_force_min(binary, g), 1e-12);
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto t = random_small_tree(seed, 16);
    for (double g : {0.3, 1.0, 1.7}) {
      const auto mc = min_cutset_value(t, g);
      EXPECT_NEAR(mc.value, brute_force_min(t, g), 1e-12) << "seed " << seed << " gamma " << g;
      EXPECT_TRUE(is_valid_cutset(t, mc.cut));
      EXPECT_NEAR(cutset_value(t, mc.cut, g), mc.value, 1e-12);
    }
  }
}

TEST(MinCut, DualityAndMonotonicity) {
  const auto spec = GrowthSpec::from_exponent(1.0, 200);
  double prev_depth_value = std::numeric_limits<double>::infinity();
  for (int d : {50, 100, 200}) {
    const auto t = build_spherical_tree(GrowthSpec::from_exponent(1.0, d));
    double prev_gamma_value = std::numeric_limits<double>::infinity();
    for (double g : {0.5, 1.0, 1.5}) {
      const auto caps = power_capacities(t, g);
      const auto mc = min_cut_with_capacity(t, caps);
      const auto flow = max_flow_with_capacity(t, caps);
      EXPECT_NEAR(flow.strength, mc.value, 1e-9);
      EXPECT_LT(conservation_defect(t, flow), 1e-12);
      for (VertexId v = 1; v < static_cast<VertexId>(t.size()); ++v)
        EXPECT_LE(flow.flow[static_cast<std::size_t>(v)], caps[static_cast<std::size_t>(v)] + 1e-15);
      EXPECT_LE(mc.value, prev_gamma_value + 1e-15);
      prev_gamma_value = mc.value;
    }
    const double v15 = min_cutset_value(t, 1.5).value;
    EXPECT_LT(v15, prev_depth_value);
    prev_depth_value = v15;
  }
  (void)spec;
}

TEST(MaxFlow, PathWithUnitCapacities) {
  const auto t = build_spherical_tree(GrowthSpec::from_exponent(0.0, 12));
  const std::vector<double> caps(t.size(), 1.0);
  const auto f = max_flow_with_capacity(t, caps);
  EXPECT_DOUBLE_EQ(f.strength, 1.0);
  for (VertexId v = 1; v < static_cast<VertexId>(t.size()); ++v) EXPECT_DOUBLE_EQ(f.flow[static_cast<std::size_t>(v)], 1.0);
}

TEST(MaxFlow, BlockedSubtreeCarriesNoFlow) {
  const auto t = build_spherical_tree(GrowthSpec::from_sizes({1, 2, 4}));
  std::vector<double> caps(t.size(), 1.0);
  const VertexId blocked = 1;
  for (VertexId c : t.children(blocked)) caps[static_cast<std::size_t>(c)] = 0.0;
  const auto f = max_flow_with_capacity(t, caps);
  EXPECT_DOUBLE_EQ(f.flow[static_cast<std::size_t>(blocked)], 0.0);
  EXPECT_DOUBLE_EQ(f.strength, 1.0);
}

TEST(MaxFlow, StrengthBoundedBelowGammaUnderBranchingRuin) {
  std::vector<double> s;
  for (int d : {50, 100, 200}) {
    const auto t = build_spherical_tree(GrowthSpec::from_exponent(1.0, d));
    s.push_back(max_flow_with_capacity(t, power_capacities(t, 0.5)).strength);
  }
  EXPECT_GE(s.back(), 0.5 * s.front());
}

TEST(BranchingRuin, PathIsDecayingEverywhere) {
  const std::vector<int> depths{50, 100, 200};
  // Over a fourfold depth range the rule resolves decay only for gamma above 1/2.
  const std::vector<double> gammas{0.75, 1.0, 1.5};
  const auto br = estimate_branching_ruin(GrowthSpec::from_exponent(0.0, 50), depths, gammas);
  for (const auto& p : br.points) EXPECT_EQ(p.trend, Trend::zero);
  EXPECT_EQ(br.gamma_lo, 0.0);
  EXPECT_EQ(br.gamma_hi, 0.75);
}

TEST(BranchingRuin, ExponentOneBracketContainsOne) {
  const std::vector<int> depths{50, 100, 200, 400};
  const std::vector<double> gammas{0.5, 0.75, 1.5, 2.0};
  const auto br = estimate_branching_ruin(GrowthSpec::from_exponent(1.0, 50), depths, gammas);
  EXPECT_LT(br.gamma_lo, 1.0);
  EXPECT_GT(br.gamma_hi, 1.0);
  EXPECT_LT(br.gamma_lo, br.gamma_hi);
}

TEST(BranchingRuin, BinaryTreeIsPositiveOnTheGrid) {
  std::vector<std::size_t> sizes{1};
  for (int n = 1; n <= 14; ++n) sizes.push_back(sizes.back() * 2);
  const std::vector<int> depths{4, 8, 14};
  const std::vector<double> gammas{0.5, 1.0, 2.0};
  const auto br = estimate_branching_ruin(GrowthSpec::from_sizes(sizes), depths, gammas);
  for (const auto& p : br.points) EXPECT_EQ(p.trend, Trend::positive);
  EXPECT_EQ(br.gamma_lo, 2.0);
}

TEST(TreeIo, GrowthSpecRoundTrip) {
  const auto spec = GrowthSpec::from_exponent(0.7, 33);
  const auto back = growth_spec_from_json(growth_spec_to_json(spec));
  EXPECT_EQ(back.targets(), spec.targets());
  const auto sizes = GrowthSpec::from_sizes({1, 2, 2, 5});
  EXPECT_EQ(growth_spec_from_json(growth_spec_to_json(sizes)).targets(), sizes.targets());
}

TEST(TreeIo, ErrorsCarryFieldPaths) {
  try {
    growth_spec_from_json(nlohmann::json{{"mode", "exponent"}, {"b", 0.5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "tree.depth");
  }
  EXPECT_THROW(growth_spec_from_json(nlohmann::json{{"mode", "spiral"}}), ValidationError);
  try {
    growth_spec_from_json(nlohmann::json{{"mode", "explicit"}, {"sizes", {1, 3, 2}}}, "config.tree");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "config.tree.sizes");
    EXPECT_EQ(std::string(e.what()), "config.tree.sizes: level sizes must be non-decreasing");
  }
}
