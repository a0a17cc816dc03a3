#include "tsaw/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tsaw/error.hpp"

namespace tsaw::walk {

WeightFunction::WeightFunction(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive", "beta");
  // exp(-beta d) underflows to zero once beta d > ~745.
  const double limit = std::ceil(746.0 / beta) + 1.0;
  const std::size_t n = static_cast<std::size_t>(std::min(limit, 1.0e7));
  table_.resize(n);
  for (std::size_t d = 0; d < n; ++d) table_[d] = std::exp(-beta * static_cast<double>(d));
}

double WeightFunction::operator()(std::uint64_t n) const { return std::exp(-beta_ * static_cast<double>(n)); }

void EdgeLocalTimes::record_down(VertexId c) {
  auto& d = down_[static_cast<std::size_t>(c)];
  if (d == 0 && up_[static_cast<std::size_t>(c)] == 0) touched_.push_back(c);
  ++d;
}

void EdgeLocalTimes::record_up(VertexId c) {
  auto& u = up_[static_cast<std::size_t>(c)];
  if (u == 0 && down_[static_cast<std::size_t>(c)] == 0) touched_.push_back(c);
  ++u;
}

void EdgeLocalTimes::reset() {
  for (VertexId c : touched_) {
    down_[static_cast<std::size_t>(c)] = 0;
    up_[static_cast<std::size_t>(c)] = 0;
  }
  touched_.clear();
}

void WalkState::reset() {
  current = 0;
  steps = 0;
  root_returns = 0;
  max_level = 0;
  local_times.reset();
}

void advance(WalkState& s, const RootedTree& t, VertexId next) {
  const VertexId x = s.current;
  if (next != x && x != t.root() && next == t.parent(x)) {
    s.local_times.record_up(x);
  } else if (t.contains(next) && next != t.root() && t.parent(next) == x) {
    s.local_times.record_down(next);
  } else {
    throw ValidationError("vertex " + std::to_string(next) + " is not adjacent to " + std::to_string(x), "walk");
  }
  s.current = next;
  ++s.steps;
  if (next == t.root()) ++s.root_returns;
  s.max_level = std::max(s.max_level, t.level(next));
}

bool parity_holds(const WalkState& s, const RootedTree& t) {
  const VertexId x = s.current;
  const auto& lt = s.local_times;
  auto gap = [&](VertexId c) {
    return std::llabs(static_cast<long long>(lt.down(c)) - static_cast<long long>(lt.up(c)));
  };
  if (x != t.root()) {
    // Below the parent edge: one more down than up crossing.
    if (static_cast<long long>(lt.down(x)) - static_cast<long long>(lt.up(x)) != 1) return false;
  }
  for (VertexId c : t.children(x))
    if (gap(c) != 0) return false;
  std::uint64_t total = 0;
  for (VertexId c : lt.touched()) total += lt.total(c);
  return total == s.steps;
}

std::vector<VertexId> neighbours(const RootedTree& t, VertexId x) {
  std::vector<VertexId> out;
  if (x != t.root()) out.push_back(t.parent(x));
  for (VertexId c : t.children(x)) out.push_back(c);
  return out;
}

std::vector<std::pair<VertexId, double>> transition_law(const WalkState& s, const RootedTree& t,
                                                        const WeightFunction& w) {
  const VertexId x = s.current;
  std::vector<std::pair<VertexId, double>> out;
  std::uint64_t lmin = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> ls;
  for (VertexId y : neighbours(t, x)) {
    const VertexId c = (x != t.root() && y == t.parent(x)) ? x : y;
    ls.push_back(s.local_times.total(c));
    lmin = std::min(lmin, ls.back());
    out.emplace_back(y, 0.0);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].second = w.relative(ls[i] - lmin);
    z += out[i].second;
  }
  for (auto& p : out) p.second /= z;
  return out;
}

ClockStore::ClockStore(const RootedTree& t, double beta, std::uint64_t seed)
    : tree_(&t), beta_(beta), seed_(seed), log_sums_(2 * t.size()) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive", "beta");
}

std::uint64_t ClockStore::key(VertexId x, VertexId y) const {
  if (x != tree_->root() && y == tree_->parent(x)) return 2 * static_cast<std::uint64_t>(x) + 1;
  if (tree_->contains(y) && y != tree_->root() && tree_->parent(y) == x) return 2 * static_cast<std::uint64_t>(y);
  throw ValidationError("clock requested for a non-edge", "clocks");
}

double ClockStore::clock(VertexId x, VertexId y, std::uint32_t k) const {
  const std::uint64_t kk = key(x, y);
  if (!injected_.empty()) {
    auto it = injected_.find((kk << 32) | k);
    if (it != injected_.end()) return it->second;
  }
  return counter_exponential(seed_, kk, k);
}

double ClockStore::log_partial_sum(VertexId x, VertexId y, std::uint32_t count) {
  const std::uint64_t kk = key(x, y);
  auto& sums = log_sums_[kk];
  if (sums.empty()) touched_.push_back(kk);
  const double shift = (kk & 1) ? beta_ : 0.0;
  while (sums.size() <= count) {
    const auto k = static_cast<std::uint32_t>(sums.size());
    const double term = std::log(clock(x, y, k)) + shift + 2.0 * beta_ * static_cast<double>(k);
    if (sums.empty()) {
      sums.push_back(term);
    } else {
      const double a = sums.back();
      const double hi = std::max(a, term), lo = std::min(a, term);
      sums.push_back(hi + std::log1p(std::exp(lo - hi)));
    }
  }
  return sums[count];
}

void ClockStore::preset(VertexId x, VertexId y, std::uint32_t k, double value) {
  if (!(value > 0.0)) throw ValidationError("clock values must be positive", "clocks");
  const std::uint64_t kk = key(x, y);
  if (log_sums_[kk].size() > k) throw ValidationError("clock already consumed", "clocks");
  injected_[(kk << 32) | k] = value;
}

void ClockStore::reset(std::uint64_t seed) {
  for (auto kk : touched_) log_sums_[kk].clear();
  touched_.clear();
  injected_.clear();
  seed_ = seed;
}

std::size_t ClockStore::cached_keys() const { return touched_.size(); }

namespace {

[[noreturn]] void escape(VertexId x) {
  throw TruncationEscape("walk reached the truncation depth at vertex " + std::to_string(x), x);
}

}  // namespace

VertexId step_direct(WalkState& s, const RootedTree& t, const WeightFunction& w, Rng& rng) {
  const VertexId x = s.current;
  if (t.is_cap_leaf(x)) escape(x);
  const auto ch = t.children(x);
  const bool has_parent = x != t.root();
  const auto& lt = s.local_times;
  VertexId next;
  if (!has_parent && ch.size() == 1) {
    next = ch[0];
  } else if (has_parent && ch.empty()) {
    next = t.parent(x);
  } else {
    // Weights relative to the smallest local time at x; at most a handful of neighbours.
    std::uint64_t lmin = has_parent ? lt.total(x) : std::numeric_limits<std::uint64_t>::max();
    for (VertexId c : ch) lmin = std::min(lmin, lt.total(c));
    double z = has_parent ? w.relative(lt.total(x) - lmin) : 0.0;
    for (VertexId c : ch) z += w.relative(lt.total(c) - lmin);
    double u = rng.uniform() * z;
    next = ch.back();
    bool chosen = false;
    if (has_parent) {
      const double wp = w.relative(lt.total(x) - lmin);
      if (u < wp) {
        next = t.parent(x);
        chosen = true;
      } else {
        u -= wp;
      }
    }
    if (!chosen) {
      for (VertexId c : ch) {
        const double wc = w.relative(lt.total(c) - lmin);
        if (u < wc) {
          next = c;
          break;
        }
        u -= wc;
      }
    }
  }
  advance(s, t, next);
  return next;
}

VertexId step_rubin(WalkState& s, ClockStore& clocks, const RootedTree& t) {
  const VertexId x = s.current;
  if (t.is_cap_leaf(x)) escape(x);
  const auto ch = t.children(x);
  const auto& lt = s.local_times;
  VertexId best = tree::kNoVertex;
  double best_t = std::numeric_limits<double>::infinity();
  if (x != t.root()) {
    best = t.parent(x);
    best_t = clocks.log_partial_sum(x, best, lt.up(x));
  }
  for (VertexId c : ch) {
    const double tc = clocks.log_partial_sum(x, c, lt.down(c));
    if (tc < best_t || best == tree::kNoVertex) {
      best_t = tc;
      best = c;
    }
  }
  advance(s, t, best);
  return best;
}

const char* to_string(Engine e) { return e == Engine::direct ? "direct" : "rubin"; }

const char* to_string(ExcursionOutcome o) {
  switch (o) {
    case ExcursionOutcome::returned: return "returned";
    case ExcursionOutcome::step_capped: return "step_capped";
    default: return "level_capped";
  }
}

std::uint32_t ExcursionRecord::crossings(VertexId child) const {
  auto it = std::lower_bound(downward.begin(), downward.end(), std::make_pair(child, std::uint32_t{0}));
  return (it != downward.end() && it->first == child) ? it->second : 0;
}

template <class Step>
ExcursionRecord ExcursionRunner::run_impl(const ExcursionCaps& caps, Step&& step) {
  if (caps.max_steps < 1 || caps.max_level < 1) throw ValidationError("caps must be positive", "caps");
  const RootedTree& t = *tree_;
  state_.reset();
  const int level_cap = std::min(caps.max_level, t.depth());
  ExcursionRecord rec;
  rec.outcome = ExcursionOutcome::step_capped;
  while (state_.steps < caps.max_steps) {
    const VertexId y = step();
    if (y == t.root()) {
      rec.outcome = ExcursionOutcome::returned;
      break;
    }
    if (t.level(y) >= level_cap) {
      rec.outcome = ExcursionOutcome::level_capped;
      break;
    }
  }
  rec.steps = state_.steps;
  rec.max_level = state_.max_level;
  const auto& lt = state_.local_times;
  for (VertexId c : lt.touched())
    if (lt.down(c) > 0) rec.downward.emplace_back(c, lt.down(c));
  std::sort(rec.downward.begin(), rec.downward.end());
  return rec;
}

ExcursionRecord ExcursionRunner::run(const ExcursionCaps& caps, Rng& rng) {
  return run_impl(caps, [&] { return step_direct(state_, *tree_, *w_, rng); });
}

ExcursionRecord ExcursionRunner::run(const ExcursionCaps& caps, ClockStore& clocks) {
  return run_impl(caps, [&] { return step_rubin(state_, clocks, *tree_); });
}

ExcursionRecord run_excursion(const RootedTree& t, const WeightFunction& w, const ExcursionCaps& caps, Rng& rng) {
  ExcursionRunner r(t, w);
  return r.run(caps, rng);
}

ExcursionRecord run_excursion(const RootedTree& t, const WeightFunction& w, const ExcursionCaps& caps,
                              ClockStore& clocks) {
  ExcursionRunner r(t, w);
  return r.run(caps, clocks);
}

ExtensionWalk::ExtensionWalk(const RootedTree& t, VertexId v, ClockStore& clocks)
    : path_(t.geodesic(v)), clocks_(&clocks), down_(path_.size(), 0), up_(path_.size(), 0) {
  if (!t.contains(v) || v == t.root()) throw ValidationError("extension target must be a non-root vertex", "v");
}

void ExtensionWalk::step() {
  const std::size_t m = path_.size() - 1;
  std::size_t next;
  if (index_ == 0) {
    next = 1;
  } else if (index_ == m) {
    next = m - 1;  // no clock consumed at the target
  } else {
    const VertexId x = path_[index_];
    const double t_up = clocks_->log_partial_sum(x, path_[index_ - 1], up_[index_]);
    const double t_down = clocks_->log_partial_sum(x, path_[index_ + 1], down_[index_ + 1]);
    next = t_up <= t_down ? index_ - 1 : index_ + 1;
  }
  if (next > index_) {
    ++down_[next];
  } else {
    ++up_[index_];
  }
  index_ = next;
  ++moves_;
}

ExtensionOutcome run_extension(VertexId v, ClockStore& clocks, const RootedTree& t) {
  ExtensionWalk ext(t, v, clocks);
  const std::size_t m = ext.path().size() - 1;
  do {
    ext.step();
    if (ext.index() == m) return ExtensionOutcome::hit;
  } while (ext.index() != 0);
  return ExtensionOutcome::returned;
}

namespace {

template <class Step>
TrajectoryStats run_walk_impl(const RootedTree& t, std::uint64_t steps, std::span<const std::uint64_t> checkpoints,
                              WalkState& s, Step&& step) {
  if (steps < 1) throw ValidationError("step count must be >= 1", "T");
  TrajectoryStats out;
  std::size_t next_cp = 0;
  while (s.steps < steps) {
    step();
    while (next_cp < checkpoints.size() && checkpoints[next_cp] <= s.steps) {
      if (checkpoints[next_cp] == s.steps) out.checkpoints.emplace_back(s.steps, t.level(s.current));
      ++next_cp;
    }
  }
  out.returns = s.root_returns;
  out.final_level = t.level(s.current);
  out.max_level = s.max_level;
  return out;
}

}  // namespace

TrajectoryStats run_walk(const RootedTree& t, const WeightFunction& w, std::uint64_t steps, Rng& rng,
                         std::span<const std::uint64_t> checkpoints) {
  WalkState s(t);
  return run_walk_impl(t, steps, checkpoints, s, [&] { step_direct(s, t, w, rng); });
}

TrajectoryStats run_walk(const RootedTree& t, std::uint64_t steps, ClockStore& clocks,
                         std::span<const std::uint64_t> checkpoints) {
  WalkState s(t);
  return run_walk_impl(t, steps, checkpoints, s, [&] { step_rubin(s, clocks, t); });
}

}  // namespace tsaw::walk
