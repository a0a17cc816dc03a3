#include "tsaw/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "tsaw/error.hpp"
#include "tsaw/parallel.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/stats.hpp"

namespace tsaw::perc {

using walk::ExcursionOutcome;

const char* to_string(EdgeMark m) {
  switch (m) {
    case EdgeMark::open: return "open";
    case EdgeMark::closed: return "closed";
    case EdgeMark::undetermined: return "undetermined";
  }
  return "?";
}

std::uint32_t PercolationSample::local_time(VertexId child) const {
  const auto it = std::lower_bound(open.begin(), open.end(), std::make_pair(child, std::uint32_t{0}));
  return it != open.end() && it->first == child ? it->second : 0;
}

EdgeMark PercolationSample::mark(const RootedTree& t, VertexId child) const {
  if (child <= 0 || !t.contains(child)) throw ValidationError("not an edge", "edge");
  if (local_time(child) > 0) return EdgeMark::open;
  if (returned() && t.level(child) <= depth_limit) return EdgeMark::closed;
  return EdgeMark::undetermined;
}

bool PercolationSample::connected(const RootedTree& t) const {
  for (const auto& [c, n] : open) {
    if (n == 0) return false;
    const VertexId p = t.parent(c);
    if (p != t.root() && local_time(p) == 0) return false;
  }
  return true;
}

namespace {

int clamp_depth(const RootedTree& t, int D) {
  if (D < 1) throw ValidationError("depth must be >= 1", "D");
  return std::min(D, t.depth());
}

PercolationSample from_record(const walk::ExcursionRecord& rec, int D) {
  PercolationSample s;
  s.outcome = rec.outcome;
  s.steps = rec.steps;
  s.depth_limit = D;
  s.open = rec.downward;
  s.cluster_depth = rec.max_level;
  return s;
}

walk::ExcursionCaps depth_caps(const walk::ExcursionCaps& caps, int D) {
  walk::ExcursionCaps c = caps;
  c.max_level = std::min(caps.max_level, D);
  return c;
}

double binomial(double p, std::uint64_t n) { return n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0; }

}  // namespace

PercolationSample sample_percolation(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                     Rng& rng) {
  D = clamp_depth(t, D);
  const walk::WeightFunction w(beta);
  return from_record(walk::run_excursion(t, w, depth_caps(caps, D), rng), D);
}

PercolationSample sample_percolation(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                     walk::ClockStore& clocks) {
  D = clamp_depth(t, D);
  const walk::WeightFunction w(beta);
  return from_record(walk::run_excursion(t, w, depth_caps(caps, D), clocks), D);
}

PercolationSample sample_percolation_extensions(const RootedTree& t, int D, walk::ClockStore& clocks) {
  D = clamp_depth(t, D);
  PercolationSample s;
  s.depth_limit = D;
  for (int n = 1; n <= D; ++n)
    for (VertexId v : t.level_vertices(n)) {
      // an edge can only open below an open edge
      if (n > 1 && s.local_time(t.parent(v)) == 0) continue;
      if (walk::run_extension(v, clocks, t) == walk::ExtensionOutcome::hit) {
        s.open.emplace_back(v, 1);
        s.cluster_depth = n;
      }
    }
  std::sort(s.open.begin(), s.open.end());
  return s;
}

CoupledComparison compare_routes(const RootedTree& t, double beta, int D, const walk::ExcursionCaps& caps,
                                 std::uint64_t runs, std::uint64_t master_seed) {
  D = clamp_depth(t, D);
  CoupledComparison out;
  out.runs = runs;
  walk::ClockStore clocks(t, beta, master_seed);
  for (std::uint64_t i = 0; i < runs; ++i) {
    clocks.reset(derive_replica_seed(master_seed, i));
    const auto exc = sample_percolation(t, beta, D, caps, clocks);
    if (!exc.returned()) continue;
    const auto ext = sample_percolation_extensions(t, D, clocks);
    ++out.compared;
    bool same = exc.open.size() == ext.open.size();
    for (std::size_t k = 0; same && k < exc.open.size(); ++k) same = exc.open[k].first == ext.open[k].first;
    out.edges_compared += t.size() - 1;
    if (!same) ++out.mismatched;
  }
  return out;
}

double LevelFrequency::se() const { return binomial(p(), determined); }

MarginalEnsemble open_frequencies(const RootedTree& t, double beta, std::span<const int> levels,
                                  const walk::ExcursionCaps& caps, std::uint64_t runs, std::uint64_t master_seed,
                                  int threads) {
  if (levels.empty()) throw ValidationError("level grid is empty", "levels");
  int D = 0;
  std::vector<VertexId> rep;
  for (int n : levels) {
    if (n < 1 || n > t.depth()) throw ValidationError("level outside the tree", "levels");
    rep.push_back(t.level_vertices(n).front());
    D = std::max(D, n);
  }
  const walk::WeightFunction w(beta);
  const auto c = depth_caps(caps, D);
  const std::size_t slots = chunk_count(runs, threads);
  std::vector<MarginalEnsemble> part(slots);
  parallel_chunks(runs, threads, [&](std::uint64_t b, std::uint64_t e, std::size_t slot) {
    MarginalEnsemble& acc = part[slot];
    acc.levels.resize(levels.size());
    walk::ExcursionRunner runner(t, w);
    for (std::uint64_t i = b; i < e; ++i) {
      Rng rng(derive_replica_seed(master_seed, i));
      const auto s = from_record(runner.run(c, rng), D);
      if (!s.returned()) ++acc.capped;
      for (std::size_t k = 0; k < rep.size(); ++k) {
        const EdgeMark m = s.mark(t, rep[k]);
        if (m == EdgeMark::undetermined) continue;
        ++acc.levels[k].determined;
        if (m == EdgeMark::open) ++acc.levels[k].open;
      }
    }
  });
  MarginalEnsemble out;
  out.runs = runs;
  out.levels.resize(levels.size());
  for (std::size_t k = 0; k < levels.size(); ++k) out.levels[k].level = levels[k];
  for (const auto& p : part) {
    out.capped += p.capped;
    for (std::size_t k = 0; k < p.levels.size(); ++k) {
      out.levels[k].open += p.levels[k].open;
      out.levels[k].determined += p.levels[k].determined;
    }
  }
  return out;
}

EdgeMarginalTable adapted_conductances(double beta, int D, double leak_budget) {
  if (D < 1) throw ValidationError("depth must be >= 1", "D");
  chains::ChainOptions opt;
  opt.beta = beta;
  opt.leak_budget = leak_budget;
  const auto rs = chains::ruin_series(D, opt);
  EdgeMarginalTable out;
  out.r = rs.r;
  out.leak = rs.leak;
  out.conductance.assign(static_cast<std::size_t>(D) + 1, std::numeric_limits<double>::quiet_NaN());
  out.conductance[1] = 1.0;
  for (int n = 2; n <= D; ++n) {
    const double rn = out.r[static_cast<std::size_t>(n)], rp = out.r[static_cast<std::size_t>(n - 1)];
    const double ratio = rn / rp;
    if (!(ratio < 1.0))
      throw NumericBudgetError("ruin probabilities not strictly decreasing at n = " + std::to_string(n) +
                               "; kernel leak has corrupted the series");
    out.conductance[static_cast<std::size_t>(n)] = rn / (1.0 - ratio);
  }
  return out;
}

EdgePair make_pair(const RootedTree& t, EdgeRef e1, EdgeRef e2) {
  for (EdgeRef e : {e1, e2})
    if (e.child <= 0 || !t.contains(e.child)) throw ValidationError("not an edge", "pair");
  const VertexId a = t.common_ancestor(e1.child, e2.child);
  if (a == t.root()) throw ValidationError("edges share no common edge below the root", "pair");
  return EdgePair{e1, e2, EdgeRef{a}};
}

bool PairEstimate::mixture_ok(double z) const { return std::fabs(mixture_diff) <= z * mixture_se + 1e-12; }

namespace {

PairEstimate finish_pair(const EdgePair& pair, std::map<std::uint32_t, PairStratum> strata, std::uint64_t excluded,
                         std::uint64_t min_hits) {
  PairEstimate est;
  est.pair = pair;
  est.excluded = excluded;
  std::uint64_t n = 0, n1 = 0, n2 = 0, n12 = 0;
  for (const auto& [j, s] : strata) {
    n += s.n;
    n1 += s.n1;
    n2 += s.n2;
    n12 += s.n12;
  }
  est.conditioning_hits = n;
  est.widened = n < min_hits;
  est.strata = std::move(strata);
  if (n == 0) return est;
  const double N = static_cast<double>(n);
  est.joint = n12 / N;
  est.p1 = n1 / N;
  est.p2 = n2 / N;
  est.joint_se = binomial(est.joint, n);
  est.p1_se = binomial(est.p1, n);
  est.p2_se = binomial(est.p2, n);
  if (est.p1 > 0.0 && est.p2 > 0.0) {
    est.M = est.joint / (est.p1 * est.p2);
    if (est.joint > 0.0) {
      // delta method on log M with influence I12/J - I1/P1 - I2/P2
      const double var =
          1.0 / est.joint - 1.0 / est.p1 - 1.0 / est.p2 + 2.0 * est.joint / (est.p1 * est.p2) - 1.0;
      est.M_se = est.M * std::sqrt(std::max(0.0, var) / N);
    } else {
      est.M_se = std::numeric_limits<double>::infinity();
    }
  }
  double se2 = 0.0;
  for (const auto& [j, s] : est.strata) {
    const double w = s.n / N;
    const double a = static_cast<double>(s.n1) / s.n, b = static_cast<double>(s.n2) / s.n;
    est.mixture += w * a * b;
    se2 += w * w * a * (1.0 - a) * b * (1.0 - b) / s.n;
  }
  est.mixture_diff = est.joint - est.mixture;
  est.mixture_se = std::sqrt(se2);
  return est;
}

}  // namespace

std::vector<PairEstimate> qi_sweep(const RootedTree& t, double beta, std::span<const EdgePair> pairs,
                                   const QiOptions& opt, std::uint64_t master_seed) {
  if (pairs.empty()) throw ValidationError("pair list is empty", "pairs");
  if (opt.runs < 1) throw ValidationError("runs must be >= 1", "reps");
  int D = 0;
  for (const auto& p : pairs)
    D = std::max({D, t.level(p.e1.child), t.level(p.e2.child)});
  // the level cap never cuts the excursion above the deepest edge of interest
  D = std::min(t.depth(), std::max(D + 1, opt.caps.max_level));
  // pre-size so the shallowest-probability conditioning edge expects min_hits openings
  const auto table = adapted_conductances(beta, std::max(2, D));
  std::uint64_t runs = opt.runs;
  for (const auto& p : pairs) {
    const double r = table.r[static_cast<std::size_t>(t.level(p.e.child))];
    runs = std::max(runs, static_cast<std::uint64_t>(std::ceil(static_cast<double>(opt.min_hits) / r)));
  }
  runs = std::min(runs, std::max(opt.runs, opt.max_runs));
  const walk::WeightFunction w(beta);
  walk::ExcursionCaps caps = depth_caps(opt.caps, D);
  struct Acc {
    std::vector<std::map<std::uint32_t, PairStratum>> strata;
    std::uint64_t excluded = 0;
  };
  std::vector<Acc> part(chunk_count(runs, opt.threads));
  parallel_chunks(runs, opt.threads, [&](std::uint64_t b, std::uint64_t e, std::size_t slot) {
    Acc& acc = part[slot];
    acc.strata.resize(pairs.size());
    walk::ExcursionRunner runner(t, w);
    for (std::uint64_t i = b; i < e; ++i) {
      Rng rng(derive_replica_seed(master_seed, i));
      const auto s = from_record(runner.run(caps, rng), D);
      if (!s.returned()) {
        ++acc.excluded;
        continue;
      }
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::uint32_t j = s.local_time(pairs[k].e.child);
        if (j == 0) continue;
        const bool o1 = s.local_time(pairs[k].e1.child) > 0, o2 = s.local_time(pairs[k].e2.child) > 0;
        PairStratum& st = acc.strata[k][j];
        ++st.n;
        st.n1 += o1;
        st.n2 += o2;
        st.n12 += o1 && o2;
      }
    }
  });
  std::vector<PairEstimate> out;
  std::uint64_t excluded = 0;
  for (const auto& p : part) excluded += p.excluded;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    std::map<std::uint32_t, PairStratum> merged;
    for (const auto& p : part) {
      if (p.strata.empty()) continue;
      for (const auto& [j, s] : p.strata[k]) {
        PairStratum& m = merged[j];
        m.n += s.n;
        m.n1 += s.n1;
        m.n2 += s.n2;
        m.n12 += s.n12;
      }
    }
    out.push_back(finish_pair(pairs[k], std::move(merged), excluded, opt.min_hits));
    out.back().runs = runs;
  }
  return out;
}

PairEstimate qi_ratio(const RootedTree& t, double beta, const EdgePair& pair, const QiOptions& opt,
                      std::uint64_t master_seed) {
  return qi_sweep(t, beta, std::span<const EdgePair>(&pair, 1), opt, master_seed).front();
}

namespace {

// Deepest level present in each vertex's subtree.
std::vector<int> subtree_bottom(const RootedTree& t) {
  std::vector<int> bottom(t.size());
  for (std::size_t v = t.size(); v-- > 0;) {
    const auto id = static_cast<VertexId>(v);
    bottom[v] = std::max(bottom[v], t.level(id));
    if (id != t.root()) {
      auto& up = bottom[static_cast<std::size_t>(t.parent(id))];
      up = std::max(up, bottom[v]);
    }
  }
  return bottom;
}

// A uniformly chosen path down from v to the given level, or kNoVertex if the subtree stops short.
VertexId random_descendant(const RootedTree& t, const std::vector<int>& bottom, VertexId v, int level, Rng& rng) {
  if (bottom[static_cast<std::size_t>(v)] < level) return tree::kNoVertex;
  while (t.level(v) < level) {
    std::vector<VertexId> ok;
    for (VertexId c : t.children(v))
      if (bottom[static_cast<std::size_t>(c)] >= level) ok.push_back(c);
    v = ok[rng.next() % ok.size()];
  }
  return v;
}

}  // namespace

std::vector<EdgePair> stratified_pairs(const RootedTree& t, int count, std::uint64_t seed) {
  if (count < 1) throw ValidationError("pair count must be >= 1", "pairs");
  Rng rng(seed);
  const auto bottom = subtree_bottom(t);
  std::vector<int> scales;
  for (int s = 1; s < t.depth(); s *= 2) scales.push_back(s);
  // (offset1, offset2): both short, one long, both long, and the nested case
  const std::vector<std::pair<int, int>> offsets{{1, 1}, {1, 8}, {8, 8}, {2, 4}, {0, 4}};
  std::vector<EdgePair> out;
  std::set<std::pair<VertexId, VertexId>> seen;
  auto add = [&](EdgeRef a, EdgeRef b) {
    const auto key = std::minmax(a.child, b.child);
    if (!seen.insert(key).second) return;
    out.push_back(make_pair(t, a, b));
  };
  for (int attempt = 0; attempt < 200 * count && static_cast<int>(out.size()) < count; ++attempt) {
    const int lvl = scales[static_cast<std::size_t>(attempt / static_cast<int>(offsets.size())) % scales.size()];
    const auto [d1, d2] = offsets[static_cast<std::size_t>(attempt) % offsets.size()];
    // branching vertices at the first level at or below lvl that has any
    std::vector<VertexId> branch;
    for (int l = lvl; l + std::max(d1, d2) <= t.depth() && branch.empty(); ++l)
      for (VertexId u : t.level_vertices(l))
        if (t.children(u).size() >= 2 && bottom[static_cast<std::size_t>(u)] >= l + std::max(d1, d2))
          branch.push_back(u);
    if (branch.empty()) continue;
    const VertexId u = branch[rng.next() % branch.size()];
    const int lu = t.level(u);
    if (d1 == 0) {
      const VertexId g = random_descendant(t, bottom, u, lu + d2, rng);
      if (g != tree::kNoVertex) add(EdgeRef{u}, EdgeRef{g});
      continue;
    }
    const auto kids = t.children(u);
    const std::size_t a = rng.next() % kids.size();
    std::size_t b = rng.next() % (kids.size() - 1);
    if (b >= a) ++b;
    const VertexId g1 = random_descendant(t, bottom, kids[a], lu + d1, rng);
    const VertexId g2 = random_descendant(t, bottom, kids[b], lu + d2, rng);
    if (g1 != tree::kNoVertex && g2 != tree::kNoVertex) add(EdgeRef{g1}, EdgeRef{g2});
  }
  return out;
}

ThetaReport theta_moments(const RootedTree& t, double beta, EdgeRef e, std::span<const EdgeRef> descendants,
                          std::span<const std::uint32_t> js, const QiOptions& opt, std::uint64_t master_seed) {
  if (e.child <= 0 || !t.contains(e.child)) throw ValidationError("not an edge", "edge");
  int D = t.level(e.child);
  for (EdgeRef g : descendants) {
    if (!t.is_ancestor(e.child, g.child)) throw ValidationError("descendant edge is not below e", "descendants");
    D = std::max(D, t.level(g.child));
  }
  D = std::min(t.depth(), std::max(D + 1, opt.caps.max_level));
  const walk::WeightFunction w(beta);
  const auto caps = depth_caps(opt.caps, D);
  struct Acc {
    std::map<std::uint32_t, std::uint64_t> counts;
    std::vector<std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>>> desc;  // j -> (n, hits)
    std::uint64_t excluded = 0;
  };
  std::vector<Acc> part(chunk_count(opt.runs, opt.threads));
  parallel_chunks(opt.runs, opt.threads, [&](std::uint64_t b, std::uint64_t end, std::size_t slot) {
    Acc& acc = part[slot];
    acc.desc.resize(descendants.size());
    walk::ExcursionRunner runner(t, w);
    for (std::uint64_t i = b; i < end; ++i) {
      Rng rng(derive_replica_seed(master_seed, i));
      const auto s = from_record(runner.run(caps, rng), D);
      if (!s.returned()) {
        ++acc.excluded;
        continue;
      }
      const std::uint32_t j = s.local_time(e.child);
      if (j == 0) continue;
      ++acc.counts[j];
      for (std::size_t k = 0; k < descendants.size(); ++k) {
        auto& cell = acc.desc[k][j];
        ++cell.first;
        cell.second += s.local_time(descendants[k].child) > 0;
      }
    }
  });
  ThetaReport rep;
  ThetaMoments& m = rep.moments;
  m.e = e;
  m.level = t.level(e.child);
  std::vector<std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>>> desc(descendants.size());
  for (const auto& p : part) {
    m.excluded += p.excluded;
    for (const auto& [j, c] : p.counts) m.counts[j] += c;
    for (std::size_t k = 0; k < p.desc.size(); ++k)
      for (const auto& [j, cell] : p.desc[k]) {
        desc[k][j].first += cell.first;
        desc[k][j].second += cell.second;
      }
  }
  double s1 = 0.0, s2 = 0.0;
  for (const auto& [j, c] : m.counts) {
    m.hits += c;
    s1 += static_cast<double>(j) * c;
    s2 += static_cast<double>(j) * j * c;
  }
  if (m.hits > 0) {
    const double H = static_cast<double>(m.hits);
    m.m1 = s1 / H;
    m.m2 = s2 / H;
    m.m1_se = std::sqrt(std::max(0.0, m.m2 - m.m1 * m.m1) / H);
  }
  chains::ChainOptions copt;
  copt.beta = beta;
  for (std::size_t k = 0; k < descendants.size(); ++k)
    for (std::uint32_t j : js) {
      DescendantBound d;
      d.g = descendants[k];
      d.m = t.level(d.g.child) - m.level + 1;
      d.j = j;
      const auto it = desc[k].find(j);
      if (it != desc[k].end()) {
        d.n = it->second.first;
        d.p_hat = static_cast<double>(it->second.second) / static_cast<double>(d.n);
        d.se = binomial(d.p_hat, d.n);
      }
      d.bound = chains::gen_ruin(d.m, static_cast<int>(j), copt);
      rep.bounds.push_back(d);
    }
  return rep;
}

ExactTheta exact_path_theta(int level, double beta, double leak_budget) {
  if (level < 1) throw ValidationError("level must be >= 1", "level");
  chains::ChainOptions opt;
  opt.beta = beta;
  opt.leak_budget = leak_budget;
  const auto z = chains::z_series(level, opt);
  const auto n = static_cast<std::size_t>(level);
  ExactTheta out;
  out.level = level;
  out.m1 = z.mean[n] / z.survive[n];
  out.m2 = z.second[n] / z.survive[n];
  return out;
}

const char* to_string(EnergyTrend e) {
  switch (e) {
    case EnergyTrend::bounded: return "bounded";
    case EnergyTrend::divergent: return "divergent";
    case EnergyTrend::inconclusive: return "inconclusive";
  }
  return "?";
}

LyonsReport lyons_checks(const tree::GrowthSpec& spec, double beta, double gamma, std::span<const int> depths) {
  if (depths.size() < 2) throw ValidationError("need at least two depths", "depths");
  for (std::size_t i = 1; i < depths.size(); ++i)
    if (depths[i] <= depths[i - 1]) throw ValidationError("depths must increase", "depths");
  if (depths.front() < 1) throw ValidationError("depths must be >= 1", "depths");
  const auto table = adapted_conductances(beta, depths.back());
  LyonsReport rep;
  rep.gamma = gamma;
  std::vector<double> mincuts;
  for (int d : depths) {
    tree::GrowthSpec s = spec;
    if (s.mode == tree::GrowthSpec::Mode::exponent) {
      s.depth = d;
    } else {
      if (s.sizes.size() <= static_cast<std::size_t>(d)) throw ValidationError("explicit sizes shorter than depth", "depths");
      s.sizes.resize(static_cast<std::size_t>(d) + 1);
    }
    const auto t = tree::build_spherical_tree(s);
    LyonsDepth row;
    row.depth = d;
    row.mincut = tree::min_cut_with_capacity(t, tree::level_capacities(t, table.r)).value;
    const auto flow = tree::max_flow_with_capacity(t, tree::power_capacities(t, gamma));
    row.strength = flow.strength;
    row.conservation = tree::conservation_defect(t, flow) / flow.strength;
    for (std::size_t v = 1; v < t.size(); ++v) {
      const double th = flow.flow[v] / flow.strength;
      if (th != 0.0) row.energy += th * th / table.conductance[static_cast<std::size_t>(t.level(static_cast<VertexId>(v)))];
    }
    rep.depths.push_back(row);
    mincuts.push_back(row.mincut);
  }
  rep.mincut_trend = tree::classify_trend(depths, mincuts);
  std::vector<double> dd(depths.begin(), depths.end());
  rep.mincut_slope = stats::fit_loglog(dd, mincuts).slope;
  const std::size_t k = rep.depths.size();
  rep.last_energy_change = std::fabs(rep.depths[k - 1].energy - rep.depths[k - 2].energy) / rep.depths[k - 2].energy;
  if (k >= 3) {
    const double d1 = rep.depths[k - 2].energy - rep.depths[k - 3].energy;
    const double d2 = rep.depths[k - 1].energy - rep.depths[k - 2].energy;
    rep.increment_ratio = d1 > 0.0 ? d2 / d1 : std::numeric_limits<double>::infinity();
    // increments per depth step shrinking geometrically: convergent partial sums
    if (rep.increment_ratio < 0.95) {
      rep.energy_trend = EnergyTrend::bounded;
      rep.energy_limit = rep.depths[k - 1].energy + d2 * rep.increment_ratio / (1.0 - rep.increment_ratio);
    } else if (rep.increment_ratio >= 1.0) {
      rep.energy_trend = EnergyTrend::divergent;
      rep.energy_limit = std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

double ReachMarker::se() const { return binomial(p(), determined); }

const char* to_string(PhaseTrend p) {
  switch (p) {
    case PhaseTrend::recurrent_consistent: return "recurrent-consistent";
    case PhaseTrend::transient_consistent: return "transient-consistent";
    case PhaseTrend::inconclusive: return "inconclusive";
  }
  return "?";
}

PhaseTrend classify_phase(std::span<const ReachMarker> m) {
  if (m.size() < 2) return PhaseTrend::inconclusive;
  auto gap_se = [](const ReachMarker& a, const ReachMarker& b) { return std::hypot(a.se(), b.se()); };
  const auto& last = m[m.size() - 1];
  const auto& prev = m[m.size() - 2];
  bool decreasing = true;
  for (std::size_t i = 1; i < m.size(); ++i) decreasing = decreasing && m[i].p() < m[i - 1].p();
  const bool plateau = std::fabs(last.p() - prev.p()) <= 2.0 * gap_se(last, prev);
  const bool drop = m.front().p() - last.p() > 2.0 * gap_se(m.front(), last);
  if (plateau) return PhaseTrend::transient_consistent;
  if (decreasing && drop) return PhaseTrend::recurrent_consistent;
  return PhaseTrend::inconclusive;
}

std::vector<PhaseRow> phase_experiment(std::span<const double> bs, double beta, const PhaseOptions& opt,
                                       std::uint64_t master_seed) {
  if (bs.empty()) throw ValidationError("growth exponent list is empty", "b");
  if (opt.markers.empty()) throw ValidationError("depth markers are empty", "markers");
  if (!std::is_sorted(opt.markers.begin(), opt.markers.end()) || opt.markers.front() < 1)
    throw ValidationError("markers must be positive and increasing", "markers");
  const int D = opt.markers.back();
  const walk::WeightFunction w(beta);
  std::vector<PhaseRow> out;
  for (std::size_t bi = 0; bi < bs.size(); ++bi) {
    const double b = bs[bi];
    const auto t = tree::build_spherical_tree(tree::GrowthSpec::from_exponent(b, D));
    const std::uint64_t seed_b = derive_replica_seed(master_seed, bi);
    PhaseRow row;
    row.b = b;
    row.vertices = t.size();
    row.runs = opt.runs;
    const auto caps = depth_caps(opt.caps, D);
    struct Acc {
      std::vector<ReachMarker> markers;
      std::uint64_t capped = 0;
    };
    std::vector<Acc> part(chunk_count(opt.runs, opt.threads));
    parallel_chunks(opt.runs, opt.threads, [&](std::uint64_t lo, std::uint64_t hi, std::size_t slot) {
      Acc& acc = part[slot];
      acc.markers.resize(opt.markers.size());
      walk::ExcursionRunner runner(t, w);
      for (std::uint64_t i = lo; i < hi; ++i) {
        Rng rng(derive_replica_seed(seed_b, 2 * i));
        const auto rec = runner.run(caps, rng);
        if (rec.outcome != ExcursionOutcome::returned) ++acc.capped;
        for (std::size_t k = 0; k < opt.markers.size(); ++k) {
          const bool reached = rec.max_level >= opt.markers[k];
          if (!reached && rec.outcome == ExcursionOutcome::step_capped) continue;
          ++acc.markers[k].determined;
          acc.markers[k].reached += reached;
        }
      }
    });
    row.markers.resize(opt.markers.size());
    for (std::size_t k = 0; k < opt.markers.size(); ++k) row.markers[k].depth = opt.markers[k];
    for (const auto& p : part) {
      row.capped += p.capped;
      for (std::size_t k = 0; k < p.markers.size(); ++k) {
        row.markers[k].reached += p.markers[k].reached;
        row.markers[k].determined += p.markers[k].determined;
      }
    }
    row.trend = classify_phase(row.markers);
    // long walks: count returns to the root within walk_steps
    std::uint64_t silent = 0;
    for (std::uint64_t k = 0; k < opt.walks; ++k) {
      Rng rng(derive_replica_seed(seed_b, 2 * k + 1));
      walk::WalkState s(t);
      while (s.steps < opt.walk_steps) {
        if (t.is_cap_leaf(s.current)) {
          ++row.escaped;
          break;
        }
        walk::step_direct(s, t, w, rng);
      }
      row.returns.push_back(s.root_returns);
      silent += s.root_returns == 0;
    }
    row.never_returned = opt.walks ? static_cast<double>(silent) / static_cast<double>(opt.walks) : 0.0;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace tsaw::perc
