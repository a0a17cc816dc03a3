#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tsaw::tree {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

// Finite rooted tree. Vertex 0 is the root; ids are assigned so that every
// parent precedes its children. Immutable after construction.
class RootedTree {
 public:
  // parents[0] must be kNoVertex and parents[v] < v for v > 0.
  static RootedTree from_parents(std::vector<VertexId> parents);

  std::size_t size() const { return parent_.size(); }
  VertexId root() const { return 0; }
  VertexId parent(VertexId v) const { return parent_[static_cast<std::size_t>(v)]; }
  int level(VertexId v) const { return level_[static_cast<std::size_t>(v)]; }
  int depth() const { return depth_; }
  std::span<const VertexId> children(VertexId v) const {
    const auto i = static_cast<std::size_t>(v);
    return {child_list_.data() + child_start_[i], child_start_[i + 1] - child_start_[i]};
  }
  std::size_t degree(VertexId v) const { return children(v).size() + (v == root() ? 0 : 1); }
  std::span<const VertexId> level_vertices(int n) const;
  std::vector<std::size_t> level_sizes() const;
  bool contains(VertexId v) const { return v >= 0 && static_cast<std::size_t>(v) < size(); }
  // Leaf at the truncation depth: the walk cannot continue downward from it.
  bool is_cap_leaf(VertexId v) const { return level(v) == depth_ && children(v).empty(); }
  // Vertices root .. v along the geodesic.
  std::vector<VertexId> geodesic(VertexId v) const;
  bool is_ancestor(VertexId a, VertexId v) const;  // a on the geodesic to v (a == v allowed)
  VertexId common_ancestor(VertexId a, VertexId b) const;
  // Whether the subtree of v reaches the truncation depth.
  bool reaches_depth(VertexId v) const { return reaches_depth_[static_cast<std::size_t>(v)] != 0; }

 private:
  std::vector<VertexId> parent_;
  std::vector<int> level_;
  std::vector<std::size_t> child_start_;
  std::vector<VertexId> child_list_;
  std::vector<std::size_t> level_start_;
  std::vector<VertexId> by_level_;
  std::vector<std::uint8_t> reaches_depth_;
  int depth_ = 0;
};

// The edge {parent(child), child}, identified by its lower endpoint.
struct EdgeRef {
  VertexId child = kNoVertex;
  friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

inline int edge_level(const RootedTree& t, EdgeRef e) { return t.level(e.child); }
inline VertexId edge_top(const RootedTree& t, EdgeRef e) { return t.parent(e.child); }

struct GrowthSpec {
  enum class Mode { exponent, explicit_sizes };
  Mode mode = Mode::exponent;
  double exponent = 0.0;          // exponent mode
  int depth = 0;                  // exponent mode
  std::vector<std::size_t> sizes; // explicit mode, sizes[0] is the root level

  static GrowthSpec from_exponent(double b, int depth);
  static GrowthSpec from_sizes(std::vector<std::size_t> sizes);
  // Level sizes 0..depth; throws ValidationError on invalid specs.
  std::vector<std::size_t> targets() const;
};

// Spherically symmetric truncation: at each level child counts differ by at most
// one. Which parents take the extra children is fixed by a deterministic
// low-discrepancy sequence, so branching is spread across lineages.
RootedTree build_spherical_tree(const GrowthSpec& spec);

struct Cutset {
  std::vector<EdgeRef> edges;
};

// Every root-to-depth-leaf path crosses exactly one member and every member
// lies above some depth leaf.
bool is_valid_cutset(const RootedTree& t, const Cutset& cut);
Cutset level_cutset(const RootedTree& t, int level);
double cutset_value(const RootedTree& t, const Cutset& cut, double gamma);

// Per-edge capacities are indexed by child vertex id; entry 0 (the root) is ignored.
std::vector<double> power_capacities(const RootedTree& t, double gamma);
std::vector<double> level_capacities(const RootedTree& t, std::span<const double> by_level);

struct MinCut {
  double value = 0.0;
  Cutset cut;
};
MinCut min_cut_with_capacity(const RootedTree& t, std::span<const double> capacity);
MinCut min_cutset_value(const RootedTree& t, double gamma);

struct FlowAssignment {
  std::vector<double> flow;  // by child vertex id, flow[root] unused
  double strength = 0.0;
};
// Flow from the root to the depth leaves. Maximal; split proportionally to
// subtree max-flow values at every branching.
FlowAssignment max_flow_with_capacity(const RootedTree& t, std::span<const double> capacity);
// max over internal non-root vertices of |inflow - outflow|
double conservation_defect(const RootedTree& t, const FlowAssignment& f);

enum class Trend { positive, zero, inconclusive };
const char* to_string(Trend t);

// Classification of a value sequence over increasing depths.
// positive: last >= floor_ratio * first.
// zero: strictly decreasing and last < floor_ratio * first.
Trend classify_trend(std::span<const int> depths, std::span<const double> values, double floor_ratio = 0.5);

struct GammaTrend {
  double gamma = 0.0;
  std::vector<double> values;
  Trend trend = Trend::inconclusive;
};

struct BranchingRuinBracket {
  double gamma_lo = 0.0;  // largest positive-classified grid point (0 if none)
  double gamma_hi = 0.0;  // smallest zero-classified grid point (+inf if none)
  bool conclusive = false;
  std::vector<GammaTrend> points;
};

BranchingRuinBracket estimate_branching_ruin(const GrowthSpec& spec, std::span<const int> depths,
                                             std::span<const double> gammas);

}  // namespace tsaw::tree
