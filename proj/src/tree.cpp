#include "tsaw/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tsaw/error.hpp"

namespace tsaw::tree {

RootedTree RootedTree::from_parents(std::vector<VertexId> parents) {
  const std::size_t n = parents.size();
  if (n == 0) throw ValidationError("tree needs at least a root", "tree.parents");
  if (parents[0] != kNoVertex) throw ValidationError("vertex 0 must be the root", "tree.parents");
  if (n > static_cast<std::size_t>(std::numeric_limits<VertexId>::max()))
    throw ValidationError("too many vertices", "tree.parents");
  RootedTree t;
  t.parent_ = std::move(parents);
  t.level_.assign(n, 0);
  std::vector<std::size_t> counts(n + 1, 0);
  for (std::size_t v = 1; v < n; ++v) {
    const VertexId p = t.parent_[v];
    if (p < 0 || static_cast<std::size_t>(p) >= v)
      throw ValidationError("parent of vertex " + std::to_string(v) + " must precede it", "tree.parents");
    t.level_[v] = t.level_[static_cast<std::size_t>(p)] + 1;
    ++counts[static_cast<std::size_t>(p)];
    t.depth_ = std::max(t.depth_, t.level_[v]);
  }
  t.child_start_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) t.child_start_[v + 1] = t.child_start_[v] + counts[v];
  t.child_list_.resize(n - 1);
  std::vector<std::size_t> fill(t.child_start_.begin(), t.child_start_.end() - 1);
  for (std::size_t v = 1; v < n; ++v) t.child_list_[fill[static_cast<std::size_t>(t.parent_[v])]++] = static_cast<VertexId>(v);

  std::vector<std::size_t> per_level(static_cast<std::size_t>(t.depth_) + 2, 0);
  for (std::size_t v = 0; v < n; ++v) ++per_level[static_cast<std::size_t>(t.level_[v]) + 1];
  for (std::size_t l = 1; l < per_level.size(); ++l) per_level[l] += per_level[l - 1];
  t.level_start_ = per_level;
  t.by_level_.resize(n);
  std::vector<std::size_t> lf(per_level.begin(), per_level.end() - 1);
  for (std::size_t v = 0; v < n; ++v) t.by_level_[lf[static_cast<std::size_t>(t.level_[v])]++] = static_cast<VertexId>(v);

  t.reaches_depth_.assign(n, 0);
  for (std::size_t v = n; v-- > 0;) {
    if (t.level_[v] == t.depth_) t.reaches_depth_[v] = 1;
    if (v > 0 && t.reaches_depth_[v]) t.reaches_depth_[static_cast<std::size_t>(t.parent_[v])] = 1;
  }
  return t;
}

std::span<const VertexId> RootedTree::level_vertices(int n) const {
  if (n < 0 || n > depth_) return {};
  const auto l = static_cast<std::size_t>(n);
  return {by_level_.data() + level_start_[l], level_start_[l + 1] - level_start_[l]};
}

std::vector<std::size_t> RootedTree::level_sizes() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(depth_) + 1);
  for (std::size_t l = 0; l < s.size(); ++l) s[l] = level_start_[l + 1] - level_start_[l];
  return s;
}

std::vector<VertexId> RootedTree::geodesic(VertexId v) const {
  std::vector<VertexId> path;
  for (VertexId u = v; u != kNoVertex; u = parent(u)) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

bool RootedTree::is_ancestor(VertexId a, VertexId v) const {
  while (level(v) > level(a)) v = parent(v);
  return v == a;
}

VertexId RootedTree::common_ancestor(VertexId a, VertexId b) const {
  while (level(a) > level(b)) a = parent(a);
  while (level(b) > level(a)) b = parent(b);
  while (a != b) {
    a = parent(a);
    b = parent(b);
  }
  return a;
}

GrowthSpec GrowthSpec::from_exponent(double b, int depth) {
  GrowthSpec s;
  s.mode = Mode::exponent;
  s.exponent = b;
  s.depth = depth;
  return s;
}

GrowthSpec GrowthSpec::from_sizes(std::vector<std::size_t> sizes) {
  GrowthSpec s;
  s.mode = Mode::explicit_sizes;
  s.sizes = std::move(sizes);
  s.depth = s.sizes.empty() ? 0 : static_cast<int>(s.sizes.size()) - 1;
  return s;
}

std::vector<std::size_t> GrowthSpec::targets() const {
  if (mode == Mode::exponent) {
    if (!(exponent >= 0.0) || !std::isfinite(exponent)) throw ValidationError("growth exponent must be >= 0", "tree.b");
    if (depth < 1) throw ValidationError("depth must be >= 1", "tree.depth");
    std::vector<std::size_t> out(static_cast<std::size_t>(depth) + 1);
    for (int n = 0; n <= depth; ++n) {
      // The epsilon absorbs pow() rounding at exact integer powers.
      const double target = std::floor(std::pow(static_cast<double>(n + 1), exponent) + 1e-9);
      if (target > 1e9) throw ValidationError("level size too large", "tree.b");
      out[static_cast<std::size_t>(n)] = std::max<std::size_t>(1, static_cast<std::size_t>(target));
    }
    return out;
  }
  if (sizes.size() < 2) throw ValidationError("depth must be >= 1", "tree.sizes");
  if (sizes[0] != 1) throw ValidationError("level 0 must hold exactly the root", "tree.sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw ValidationError("level sizes must be >= 1", "tree.sizes");
    if (sizes[i] < sizes[i - 1]) throw ValidationError("level sizes must be non-decreasing", "tree.sizes");
  }
  return sizes;
}

RootedTree build_spherical_tree(const GrowthSpec& spec) {
  const auto sizes = spec.targets();
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (total > static_cast<std::size_t>(std::numeric_limits<VertexId>::max()))
    throw ValidationError("tree too large", "tree");
  std::vector<VertexId> parents;
  parents.reserve(total);
  parents.push_back(kNoVertex);
  std::size_t level_begin = 0;
  // Extra children follow a golden-ratio Weyl sequence over level positions.
  // Giving them to the lowest ids instead would put every branching on one
  // spine and leave the rest of the tree as bare paths.
  constexpr double kGolden = 0.6180339887498949;
  double cursor = 0.0;
  std::vector<std::size_t> count;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t here = sizes[l], next = sizes[l + 1];
    count.assign(here, next / here);
    std::vector<char> bumped(here, 0);
    for (std::size_t e = 0; e < next % here; ++e) {
      std::size_t pos;
      do {
        cursor += kGolden;
        cursor -= std::floor(cursor);
        pos = std::min(here - 1, static_cast<std::size_t>(cursor * static_cast<double>(here)));
      } while (bumped[pos]);
      bumped[pos] = 1;
      ++count[pos];
    }
    for (std::size_t i = 0; i < here; ++i)
      for (std::size_t k = 0; k < count[i]; ++k) parents.push_back(static_cast<VertexId>(level_begin + i));
    level_begin += here;
  }
  return RootedTree::from_parents(std::move(parents));
}

bool is_valid_cutset(const RootedTree& t, const Cutset& cut) {
  const std::size_t n = t.size();
  std::vector<std::uint8_t> member(n, 0);
  for (const auto& e : cut.edges) {
    if (!t.contains(e.child) || e.child == t.root()) return false;
    if (member[static_cast<std::size_t>(e.child)]) return false;
    if (!t.reaches_depth(e.child)) return false;
    member[static_cast<std::size_t>(e.child)] = 1;
  }
  // crossed[v]: number of members on the geodesic edges to v. Parents precede children.
  std::vector<int> crossed(n, 0);
  for (std::size_t v = 1; v < n; ++v) {
    crossed[v] = crossed[static_cast<std::size_t>(t.parent(static_cast<VertexId>(v)))] + member[v];
    if (crossed[v] > 1) return false;
  }
  for (VertexId v : t.level_vertices(t.depth()))
    if (crossed[static_cast<std::size_t>(v)] != 1) return false;
  return !cut.edges.empty() || t.depth() == 0;
}

Cutset level_cutset(const RootedTree& t, int level) {
  if (level < 1 || level > t.depth()) throw ValidationError("level outside 1..depth", "cutset.level");
  Cutset c;
  for (VertexId v : t.level_vertices(level))
    if (t.reaches_depth(v)) c.edges.push_back({v});
  return c;
}

double cutset_value(const RootedTree& t, const Cutset& cut, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive", "gamma");
  if (!is_valid_cutset(t, cut)) throw ValidationError("edge set is not a cutset of the truncation", "cutset");
  double s = 0.0;
  for (const auto& e : cut.edges) s += std::pow(static_cast<double>(edge_level(t, e)), -gamma);
  return s;
}

std::vector<double> power_capacities(const RootedTree& t, double gamma) {
  std::vector<double> c(t.size(), 0.0);
  for (std::size_t v = 1; v < t.size(); ++v)
    c[v] = std::pow(static_cast<double>(t.level(static_cast<VertexId>(v))), -gamma);
  return c;
}

std::vector<double> level_capacities(const RootedTree& t, std::span<const double> by_level) {
  if (by_level.size() <= static_cast<std::size_t>(t.depth()))
    throw ValidationError("capacity table shorter than tree depth", "capacity");
  std::vector<double> c(t.size(), 0.0);
  for (std::size_t v = 1; v < t.size(); ++v) c[v] = by_level[static_cast<std::size_t>(t.level(static_cast<VertexId>(v)))];
  return c;
}

namespace {

// Subtree max-flow F(v) into the depth leaves through edge e_v.
std::vector<double> subtree_flow(const RootedTree& t, std::span<const double> cap, std::vector<double>& child_sum) {
  const std::size_t n = t.size();
  if (cap.size() != n) throw ValidationError("capacity table size must equal vertex count", "capacity");
  for (std::size_t v = 1; v < n; ++v)
    if (!(cap[v] >= 0.0)) throw ValidationError("capacities must be non-negative", "capacity");
  std::vector<double> f(n, 0.0);
  child_sum.assign(n, 0.0);
  for (std::size_t v = n; v-- > 0;) {
    const auto vid = static_cast<VertexId>(v);
    const bool sink = t.level(vid) == t.depth();
    double s = 0.0;
    for (VertexId c : t.children(vid)) s += f[static_cast<std::size_t>(c)];
    child_sum[v] = sink ? std::numeric_limits<double>::infinity() : s;
    f[v] = v == 0 ? s : std::min(cap[v], child_sum[v]);
  }
  return f;
}

}  // namespace

MinCut min_cut_with_capacity(const RootedTree& t, std::span<const double> capacity) {
  if (t.depth() < 1) throw ValidationError("tree depth must be >= 1", "tree");
  std::vector<double> child_sum;
  const auto f = subtree_flow(t, capacity, child_sum);
  MinCut out;
  out.value = f[0];
  std::vector<VertexId> stack(t.children(t.root()).begin(), t.children(t.root()).end());
  std::reverse(stack.begin(), stack.end());
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    if (!t.reaches_depth(v)) continue;
    const auto i = static_cast<std::size_t>(v);
    if (capacity[i] <= child_sum[i]) {
      out.cut.edges.push_back({v});
      continue;
    }
    const auto ch = t.children(v);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  std::sort(out.cut.edges.begin(), out.cut.edges.end());
  return out;
}

MinCut min_cutset_value(const RootedTree& t, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive", "gamma");
  return min_cut_with_capacity(t, power_capacities(t, gamma));
}

FlowAssignment max_flow_with_capacity(const RootedTree& t, std::span<const double> capacity) {
  std::vector<double> child_sum;
  const auto f = subtree_flow(t, capacity, child_sum);
  FlowAssignment out;
  out.flow.assign(t.size(), 0.0);
  out.strength = f[0];
  for (VertexId c : t.children(t.root())) out.flow[static_cast<std::size_t>(c)] = f[static_cast<std::size_t>(c)];
  for (std::size_t v = 1; v < t.size(); ++v) {
    const auto vid = static_cast<VertexId>(v);
    if (t.level(vid) == t.depth()) continue;
    const double in = out.flow[v];
    const double total = child_sum[v];
    if (in <= 0.0 || total <= 0.0) continue;
    for (VertexId c : t.children(vid)) {
      const auto ci = static_cast<std::size_t>(c);
      out.flow[ci] = std::min(f[ci], in * (f[ci] / total));
    }
  }
  return out;
}

double conservation_defect(const RootedTree& t, const FlowAssignment& fl) {
  double worst = 0.0;
  for (std::size_t v = 1; v < t.size(); ++v) {
    const auto vid = static_cast<VertexId>(v);
    if (t.children(vid).empty()) continue;
    double out = 0.0;
    for (VertexId c : t.children(vid)) out += fl.flow[static_cast<std::size_t>(c)];
    worst = std::max(worst, std::fabs(fl.flow[v] - out));
  }
  return worst;
}

const char* to_string(Trend t) {
  switch (t) {
    case Trend::positive: return "positive";
    case Trend::zero: return "zero";
    default: return "inconclusive";
  }
}

Trend classify_trend(std::span<const int> depths, std::span<const double> values, double floor_ratio) {
  if (depths.size() != values.size() || values.size() < 2)
    throw ValidationError("need at least two depths with values", "trend");
  for (std::size_t i = 1; i < depths.size(); ++i)
    if (depths[i] <= depths[i - 1]) throw ValidationError("depths must be increasing", "trend.depths");
  const double first = values.front(), last = values.back();
  if (last >= floor_ratio * first) return Trend::positive;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return Trend::inconclusive;
  return Trend::zero;
}

BranchingRuinBracket estimate_branching_ruin(const GrowthSpec& spec, std::span<const int> depths,
                                             std::span<const double> gammas) {
  if (depths.size() < 2) throw ValidationError("need at least two depths", "brr.depths");
  if (gammas.empty()) throw ValidationError("gamma grid is empty", "brr.gammas");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (gammas[i] <= gammas[i - 1]) throw ValidationError("gamma grid must be sorted", "brr.gammas");
  std::vector<RootedTree> trees;
  for (int d : depths) {
    GrowthSpec s = spec;
    if (s.mode == GrowthSpec::Mode::exponent) {
      s.depth = d;
    } else {
      if (d < 1 || static_cast<std::size_t>(d) >= spec.sizes.size())
        throw ValidationError("depth exceeds explicit size list", "brr.depths");
      s.sizes.assign(spec.sizes.begin(), spec.sizes.begin() + d + 1);
    }
    trees.push_back(build_spherical_tree(s));
  }
  BranchingRuinBracket out;
  out.gamma_lo = 0.0;
  out.gamma_hi = std::numeric_limits<double>::infinity();
  bool any_inconclusive = false;
  for (double g : gammas) {
    GammaTrend gt;
    gt.gamma = g;
    for (const auto& t : trees) gt.values.push_back(min_cutset_value(t, g).value);
    gt.trend = classify_trend(depths, gt.values);
    if (gt.trend == Trend::positive) out.gamma_lo = std::max(out.gamma_lo, g);
    if (gt.trend == Trend::zero) out.gamma_hi = std::min(out.gamma_hi, g);
    if (gt.trend == Trend::inconclusive) any_inconclusive = true;
    out.points.push_back(std::move(gt));
  }
  out.conclusive = !any_inconclusive && out.gamma_lo < out.gamma_hi;
  return out;
}

}  // namespace tsaw::tree
