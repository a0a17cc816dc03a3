#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tsaw/rng.hpp"
#include "tsaw/tree.hpp"

namespace tsaw::walk {

using tree::RootedTree;
using tree::VertexId;

// w(n) = exp(-beta n).
class WeightFunction {
 public:
  explicit WeightFunction(double beta);
  double beta() const { return beta_; }
  double operator()(std::uint64_t n) const;
  // w(d) for a local-time difference d >= 0, from a table; exactly 0 past underflow.
  double relative(std::uint64_t d) const { return d < table_.size() ? table_[d] : 0.0; }

 private:
  double beta_;
  std::vector<double> table_;
};

// Directed crossing counts, indexed by the child endpoint of each edge.
class EdgeLocalTimes {
 public:
  explicit EdgeLocalTimes(std::size_t vertex_count) : down_(vertex_count, 0), up_(vertex_count, 0) {}
  std::uint32_t down(VertexId c) const { return down_[static_cast<std::size_t>(c)]; }
  std::uint32_t up(VertexId c) const { return up_[static_cast<std::size_t>(c)]; }
  std::uint64_t total(VertexId c) const { return std::uint64_t{down(c)} + up(c); }
  void record_down(VertexId c);
  void record_up(VertexId c);
  // Edges crossed at least once since the last reset, in first-crossing order.
  std::span<const VertexId> touched() const { return touched_; }
  void reset();

 private:
  std::vector<std::uint32_t> down_;
  std::vector<std::uint32_t> up_;
  std::vector<VertexId> touched_;
};

struct WalkState {
  explicit WalkState(const RootedTree& t) : local_times(t.size()) {}
  VertexId current = 0;
  std::uint64_t steps = 0;
  EdgeLocalTimes local_times;
  std::uint64_t root_returns = 0;
  int max_level = 0;
  void reset();
};

// Moves the walk to a neighbour of the current vertex and updates counters.
void advance(WalkState& s, const RootedTree& t, VertexId next);

// |C(x,y) - C(y,x)| <= 1 on every edge at the current vertex, and the edge
// totals add up to the step count.
bool parity_holds(const WalkState& s, const RootedTree& t);

// Neighbours of x in tie-break order: parent first (if any), then children.
std::vector<VertexId> neighbours(const RootedTree& t, VertexId x);

// Exact one-step law from the current state (same order as neighbours()).
std::vector<std::pair<VertexId, double>> transition_law(const WalkState& s, const RootedTree& t,
                                                        const WeightFunction& w);

// Unit-exponential clocks keyed by (oriented edge, departure index), generated
// counter-style from a seed, with per-oriented-edge cached log partial sums
//   log sum_{k<=j} xi(x,y,k) / w(2k + [y is the parent of x]).
class ClockStore {
 public:
  ClockStore(const RootedTree& t, double beta, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  // Clock xi(x,y,k); (x,y) must be an edge.
  double clock(VertexId x, VertexId y, std::uint32_t k) const;
  // log T for departures 0..count from x towards y.
  double log_partial_sum(VertexId x, VertexId y, std::uint32_t count);
  // Fix xi(x,y,k) before it is first used.
  void preset(VertexId x, VertexId y, std::uint32_t k, double value);
  // Drop cached sums and switch to a fresh seed (injected values are dropped too).
  void reset(std::uint64_t seed);
  std::size_t cached_keys() const;

 private:
  std::uint64_t key(VertexId x, VertexId y) const;
  const RootedTree* tree_;
  double beta_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> log_sums_;
  std::vector<std::uint64_t> touched_;
  std::unordered_map<std::uint64_t, double> injected_;
};

VertexId step_direct(WalkState& s, const RootedTree& t, const WeightFunction& w, Rng& rng);
VertexId step_rubin(WalkState& s, ClockStore& clocks, const RootedTree& t);

enum class Engine { direct, rubin };
const char* to_string(Engine e);

struct ExcursionCaps {
  std::uint64_t max_steps = 1'000'000;
  int max_level = 1 << 30;  // clamped to the tree depth
};

enum class ExcursionOutcome { returned, step_capped, level_capped };
const char* to_string(ExcursionOutcome o);

struct ExcursionRecord {
  ExcursionOutcome outcome = ExcursionOutcome::returned;
  std::uint64_t steps = 0;
  int max_level = 0;
  // (edge child, N_e) for every edge crossed downward, sorted by vertex id.
  std::vector<std::pair<VertexId, std::uint32_t>> downward;
  std::uint32_t crossings(VertexId child) const;
};

// Reusable scratch for repeated excursions on one tree.
class ExcursionRunner {
 public:
  ExcursionRunner(const RootedTree& t, const WeightFunction& w) : tree_(&t), w_(&w), state_(t) {}
  ExcursionRecord run(const ExcursionCaps& caps, Rng& rng);
  ExcursionRecord run(const ExcursionCaps& caps, ClockStore& clocks);
  const WalkState& state() const { return state_; }

 private:
  template <class Step>
  ExcursionRecord run_impl(const ExcursionCaps& caps, Step&& step);
  const RootedTree* tree_;
  const WeightFunction* w_;
  WalkState state_;
};

ExcursionRecord run_excursion(const RootedTree& t, const WeightFunction& w, const ExcursionCaps& caps, Rng& rng);
ExcursionRecord run_excursion(const RootedTree& t, const WeightFunction& w, const ExcursionCaps& caps,
                              ClockStore& clocks);

enum class ExtensionOutcome { hit, returned };

// The extension process on the geodesic root..v, driven by a shared ClockStore.
class ExtensionWalk {
 public:
  ExtensionWalk(const RootedTree& t, VertexId v, ClockStore& clocks);
  const std::vector<VertexId>& path() const { return path_; }
  std::size_t index() const { return index_; }
  VertexId position() const { return path_[index_]; }
  std::uint64_t moves() const { return moves_; }
  void step();

 private:
  std::vector<VertexId> path_;
  ClockStore* clocks_;
  std::size_t index_ = 0;
  std::uint64_t moves_ = 0;
  std::vector<std::uint32_t> down_;  // down_[j]: departures path[j-1] -> path[j]
  std::vector<std::uint32_t> up_;    // up_[j]:   departures path[j] -> path[j-1]
};

// Whether X^(v) reaches v before returning to the root.
ExtensionOutcome run_extension(VertexId v, ClockStore& clocks, const RootedTree& t);

struct TrajectoryStats {
  std::uint64_t returns = 0;
  int final_level = 0;
  int max_level = 0;
  std::vector<std::pair<std::uint64_t, int>> checkpoints;  // (step, level)
};

TrajectoryStats run_walk(const RootedTree& t, const WeightFunction& w, std::uint64_t steps, Rng& rng,
                         std::span<const std::uint64_t> checkpoints = {});
TrajectoryStats run_walk(const RootedTree& t, std::uint64_t steps, ClockStore& clocks,
                         std::span<const std::uint64_t> checkpoints = {});

}  // namespace tsaw::walk
