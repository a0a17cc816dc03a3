#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsaw/path_chains.hpp"
#include "tsaw/tree.hpp"
#include "tsaw/walk.hpp"

namespace tsaw::perc {

using tree::EdgeRef;
using tree::RootedTree;
using tree::VertexId;

enum class EdgeMark { open, closed, undetermined };
const char* to_string(EdgeMark m);

// Ruin percolation of one first excursion: an edge is open iff the excursion
// crosses it downward. Edges are identified by their child vertex.
struct PercolationSample {
  walk::ExcursionOutcome outcome = walk::ExcursionOutcome::returned;
  std::uint64_t steps = 0;
  int depth_limit = 0;
  std::vector<std::pair<VertexId, std::uint32_t>> open;  // (child, N_e >= 1), sorted by child
  int cluster_depth = 0;                                 // deepest open edge level

  bool returned() const { return outcome == walk::ExcursionOutcome::returned; }
  std::uint32_t local_time(VertexId child) const;  // N_e; a lower bound on capped runs
  EdgeMark mark(const RootedTree& t, VertexId child) const;
  // every open edge has an open parent edge (or sits at level 1)
  bool connected(const RootedTree& t) const;
};

// Excursion route. Depth D caps the excursion level (clamped to the tree depth).
PercolationSample sample_percolation(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                     Rng& rng);
PercolationSample sample_percolation(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                     walk::ClockStore& clocks);

// Extension route: one extension walk per edge of level <= D, all reading the
// same clocks. Every edge is determined; local times are reported as 1 for open edges.
PercolationSample sample_percolation_extensions(const RootedTree& t, int D, walk::ClockStore& clocks);

struct CoupledComparison {
  std::uint64_t runs = 0;
  std::uint64_t compared = 0;    // runs whose excursion returned
  std::uint64_t mismatched = 0;  // compared runs with any differing edge
  std::uint64_t edges_compared = 0;
};
CoupledComparison compare_routes(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                 std::uint64_t runs, std::uint64_t master_seed);

// Open frequencies by level over an excursion ensemble.
struct LevelFrequency {
  int level = 0;
  std::uint64_t open = 0;
  std::uint64_t determined = 0;  // edge-samples counted
  double p() const { return determined ? static_cast<double>(open) / static_cast<double>(determined) : 0.0; }
  double se() const;
};
struct MarginalEnsemble {
  std::uint64_t runs = 0;
  std::uint64_t capped = 0;
  std::vector<LevelFrequency> levels;
};
// One representative edge per level (the lowest vertex id); undetermined marks excluded.
MarginalEnsemble open_frequencies(const RootedTree& t, double beta, std::span<const int> levels,
                                  const walk::ExcursionCaps& caps, std::uint64_t runs, std::uint64_t master_seed,
                                  int threads = 1);

// Exact marginals and adapted conductances by level.
struct EdgeMarginalTable {
  std::vector<double> r;            // r[n], n = 1..D; r[0] unused
  std::vector<double> conductance;  // c[n]
  std::vector<double> leak;
  double c_over_sqrt(int n) const { return conductance[static_cast<std::size_t>(n)] / std::sqrt(static_cast<double>(n)); }
  // per-child lookup
  double open_probability(const RootedTree& t, EdgeRef e) const { return r[static_cast<std::size_t>(tree::edge_level(t, e))]; }
  double conductance_of(const RootedTree& t, EdgeRef e) const {
    return conductance[static_cast<std::size_t>(tree::edge_level(t, e))];
  }
};
EdgeMarginalTable adapted_conductances(double beta, int D, double leak_budget = 1e-10);

// Quasi-independence estimate for a pair of edges below a common edge e.
struct EdgePair {
  EdgeRef e1, e2;
  EdgeRef e;  // last common edge of the two geodesics
};
// Throws ValidationError when the geodesics share no edge.
EdgePair make_pair(const RootedTree& t, EdgeRef e1, EdgeRef e2);

struct PairStratum {
  std::uint64_t n = 0, n1 = 0, n2 = 0, n12 = 0;
};
struct PairEstimate {
  EdgePair pair;
  std::uint64_t conditioning_hits = 0;  // returned runs with e open
  std::uint64_t runs = 0;               // excursions simulated
  std::uint64_t excluded = 0;           // capped runs
  double joint = 0.0, joint_se = 0.0;   // P(e1, e2 open | e open)
  double p1 = 0.0, p1_se = 0.0;
  double p2 = 0.0, p2_se = 0.0;
  double M = 0.0, M_se = 0.0;           // joint / (p1 p2)
  double mixture = 0.0;                 // sum_j theta(j) p_j(e1) p_j(e2)
  double mixture_diff = 0.0;            // joint - mixture
  double mixture_se = 0.0;
  bool widened = false;                 // fewer than the requested conditioning hits
  std::map<std::uint32_t, PairStratum> strata;  // by N_e
  bool mixture_ok(double z = 4.0) const;
};

struct QiOptions {
  std::uint64_t runs = 20000;      // lower bound; raised to expect min_hits conditioning hits
  std::uint64_t max_runs = 200000;
  std::uint64_t min_hits = 1000;
  walk::ExcursionCaps caps;
  int threads = 1;
};
std::vector<PairEstimate> qi_sweep(const RootedTree& t, double beta, std::span<const EdgePair> pairs,
                                   const QiOptions& opt, std::uint64_t master_seed);
PairEstimate qi_ratio(const RootedTree& t, double beta, const EdgePair& pair, const QiOptions& opt,
                      std::uint64_t master_seed);

// Stratified pair selection over dyadic scales of (|e|, |e1| - |e|, |e2| - |e|).
std::vector<EdgePair> stratified_pairs(const RootedTree& t, int count, std::uint64_t seed);

// Conditional law of N_e given N_e >= 1, plus descendant-edge probabilities p_j(g).
struct ThetaMoments {
  EdgeRef e;
  int level = 0;
  std::uint64_t hits = 0;
  std::uint64_t excluded = 0;
  double m1 = 0.0, m1_se = 0.0;
  double m2 = 0.0;
  double m1_over_sqrt() const { return m1 / std::sqrt(static_cast<double>(level)); }
  double m2_over_level() const { return m2 / static_cast<double>(level); }
  std::map<std::uint32_t, std::uint64_t> counts;  // N_e -> runs
};
struct DescendantBound {
  EdgeRef g;
  int m = 0;  // |g| - |e| + 1
  std::uint32_t j = 0;
  std::uint64_t n = 0;  // runs with N_e = j
  double p_hat = 0.0, se = 0.0;
  double bound = 0.0;   // generalized ruin r^{(j)}_m
  bool holds(double z = 4.0) const { return p_hat <= bound + z * se + 1e-12; }
};
struct ThetaReport {
  ThetaMoments moments;
  std::vector<DescendantBound> bounds;
};
ThetaReport theta_moments(const RootedTree& t, double beta, EdgeRef e, std::span<const EdgeRef> descendants,
                          std::span<const std::uint32_t> js, const QiOptions& opt, std::uint64_t master_seed);

// Exact conditional moments of N_e on the half-line (forward local-time chain).
struct ExactTheta {
  int level = 0;
  double m1 = 0.0, m2 = 0.0;
};
ExactTheta exact_path_theta(int level, double beta, double leak_budget = 1e-10);

// Lyons-type criteria on truncations of a growth spec.
struct LyonsDepth {
  int depth = 0;
  double mincut = 0.0;    // min over cutsets of the sum of exact open probabilities
  double strength = 0.0;  // max flow strength with capacities |e|^-gamma
  double energy = 0.0;    // sum theta^2 / c for the unit flow
  double conservation = 0.0;
};
enum class EnergyTrend { bounded, divergent, inconclusive };
const char* to_string(EnergyTrend e);
struct LyonsReport {
  double gamma = 0.0;
  std::vector<LyonsDepth> depths;
  tree::Trend mincut_trend = tree::Trend::inconclusive;
  double mincut_slope = 0.0;            // log-log slope of the min-cut over depth
  EnergyTrend energy_trend = EnergyTrend::inconclusive;
  double last_energy_change = 0.0;      // relative change between the last two depths
  double increment_ratio = 0.0;         // ratio of the last two energy increments
  double energy_limit = 0.0;            // geometric extrapolation of the partial sums
};
LyonsReport lyons_checks(const tree::GrowthSpec& spec, double beta, double gamma, std::span<const int> depths);

// Phase experiment: cluster reach fractions per growth exponent.
struct ReachMarker {
  int depth = 0;
  std::uint64_t reached = 0;
  std::uint64_t determined = 0;
  double p() const { return determined ? static_cast<double>(reached) / static_cast<double>(determined) : 0.0; }
  double se() const;
};
enum class PhaseTrend { recurrent_consistent, transient_consistent, inconclusive };
const char* to_string(PhaseTrend p);
struct PhaseRow {
  double b = 0.0;
  std::size_t vertices = 0;
  std::uint64_t runs = 0;
  std::uint64_t capped = 0;
  std::vector<ReachMarker> markers;
  PhaseTrend trend = PhaseTrend::inconclusive;
  // long-run return counts of full walks
  std::vector<std::uint64_t> returns;
  std::uint64_t escaped = 0;        // walks that hit the truncation depth
  double never_returned = 0.0;      // fraction of walks with no return after the first departure
};
struct PhaseOptions {
  std::vector<int> markers{50, 100, 200};
  std::uint64_t runs = 4000;
  walk::ExcursionCaps caps{2'000'000, 1 << 30};
  std::uint64_t walk_steps = 100000;
  std::uint64_t walks = 20;
  int threads = 1;
};
// Trend rule: recurrent-consistent when reach fractions strictly decrease and the
// first-to-last drop exceeds 2 SE; transient-consistent when the last two markers
// agree within 2 SE of their difference.
PhaseTrend classify_phase(std::span<const ReachMarker> markers);
std::vector<PhaseRow> phase_experiment(std::span<const double> bs, double beta, const PhaseOptions& opt,
                                       std::uint64_t master_seed);

}  // namespace tsaw::perc
