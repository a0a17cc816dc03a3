#include "tsaw/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "tsaw/path_chains.hpp"
#include "tsaw/percolation.hpp"
#include "tsaw/renewal.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/stats.hpp"
#include "tsaw/tree.hpp"

namespace tsaw::acceptance {

namespace {

constexpr double kBeta = 1.0;

// Pinned tolerances.
constexpr double kRuinChange = 0.05;
constexpr double kLeakBudget = 1e-10;
constexpr double kOracleGap = 1e-8;
constexpr double kSeFactor = 4.0;
constexpr double kStationarity = 1e-10;
constexpr double kSlopeLo = -1.65, kSlopeHi = -1.35;
constexpr double kHarmonicSpread = 1.5;
constexpr double kSurvivalLo = -0.55, kSurvivalHi = -0.45;
constexpr double kGridSpread = 2.0;
constexpr double kConductance = 0.10;
constexpr double kConstantMatch = 0.15;
constexpr double kGammaStep = 0.10;

std::string num(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

CriterionResult start(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

chains::ChainOptions chain_opt() {
  chains::ChainOptions o;
  o.beta = kBeta;
  o.leak_budget = kLeakBudget;
  return o;
}

struct RuinFit {
  double c_hat = 0.0;
  double spread = 0.0;
};

// Extrapolated r_n sqrt(n) limit from the last three dyadic points up to 2048.
RuinFit ruin_constant() {
  const auto rs = chains::ruin_series(2048, chain_opt());
  const std::vector<int> ns{256, 512, 1024, 2048};
  std::vector<double> r;
  for (int n : ns) r.push_back(rs.r[static_cast<std::size_t>(n)]);
  const auto fit = renewal::fit_ruin_constant(ns, r);
  return {fit.c_hat, fit.spread};
}

std::uint64_t stream(const AcceptanceOptions& opt, int id) { return derive_replica_seed(opt.master_seed, static_cast<std::uint64_t>(id)); }

CriterionResult c1() {
  auto r = start(1, "ruin asymptotic r_n sqrt(n), n = 1000 -> 2000");
  const auto rs = chains::ruin_series(2000, chain_opt());
  const double f1 = rs.r[1000] * std::sqrt(1000.0), f2 = rs.r[2000] * std::sqrt(2000.0);
  const double change = std::fabs(f2 - f1) / f1;
  const double leak = *std::max_element(rs.leak.begin() + 1, rs.leak.end());
  const auto fit = ruin_constant();
  r.passed = change < kRuinChange && leak < kLeakBudget;
  r.measured = "r*sqrt(n): " + num(f1, 8) + " -> " + num(f2, 8) + ", change " + num(change, 3) + ", max leak " +
               num(leak, 3) + ", extrapolated c " + num(fit.c_hat, 7);
  r.threshold = "change < 5%, leak < 1e-10";
  return r;
}

CriterionResult c2() {
  auto r = start(2, "Y/Z oracle triangle, n <= 200");
  const auto rs = chains::ruin_series(200, chain_opt());
  const auto zs = chains::z_series(200, chain_opt());
  double worst = 0.0;
  for (int n = 1; n <= 200; ++n)
    worst = std::max(worst, std::fabs(rs.r[static_cast<std::size_t>(n)] - zs.survive[static_cast<std::size_t>(n)]));
  r.passed = worst < kOracleGap;
  r.measured = "max |P(Y_{n-1}=0) - P(Z_n>=1)| = " + num(worst, 3);
  r.threshold = "< 1e-8";
  return r;
}

CriterionResult c3(const AcceptanceOptions& opt) {
  auto r = start(3, "MC vs exact ruin, n in {10,50,100}, 1e5 reps");
  const auto rs = chains::ruin_series(100, chain_opt());
  r.passed = true;
  for (int n : {10, 50, 100}) {
    const auto f = chains::mc_ruin_frequency(n, kBeta, 100000, derive_replica_seed(stream(opt, 3), n));
    const double z = (f.p() - rs.r[static_cast<std::size_t>(n)]) / f.se();
    r.passed = r.passed && std::fabs(z) < kSeFactor && f.discarded == 0;
    r.measured += "n=" + std::to_string(n) + ": " + num(f.p(), 5) + " vs " + num(rs.r[static_cast<std::size_t>(n)], 5) +
                  " (z " + num(z, 3) + ") ";
  }
  r.threshold = "|z| < 4 binomial SE";
  return r;
}

CriterionResult c4() {
  auto r = start(4, "stationarity, mixing and ratio bound of the local-time chain");
  const auto window = chains::default_eta_window(kBeta);
  const auto law = chains::stationary_data(kBeta);
  const double defect = chains::stationarity_defect(law, window);
  const auto tv = chains::eta_mixing_profile(kBeta, 40, window);
  std::vector<double> ms, vs;
  for (std::size_t m = 1; m < tv.size(); ++m)
    if (tv[m] > 1e-13) {
      ms.push_back(static_cast<double>(m));
      vs.push_back(tv[m]);
    }
  const auto fit = stats::fit_loglinear(ms, vs);
  const auto rb = chains::eta_ratio_bound(kBeta, 40, window);
  r.passed = defect < kStationarity && fit.slope < 0.0 && std::isfinite(rb.constant) && rb.constant > 0.0;
  r.measured = "TV(rho P, rho) " + num(defect, 3) + ", mixing slope " + num(fit.slope, 4) + " over " +
               std::to_string(ms.size()) + " points, ratio constant " + num(rb.constant, 5) + " over " +
               std::to_string(rb.pairs) + " (n,x)";
  r.threshold = "defect < 1e-10, slope < 0, finite constant";
  return r;
}

struct TvResult {
  double tv = 0.0;
  double err = 0.0;
};

TvResult tv_against(const std::map<std::vector<long>, std::uint64_t>& counts, std::uint64_t total,
                    const chains::PathLaw& exact) {
  TvResult out;
  const double R = static_cast<double>(total);
  std::map<std::vector<long>, std::pair<double, double>> joint;  // (empirical, exact)
  for (const auto& [k, c] : counts) joint[k].first = static_cast<double>(c) / R;
  for (const auto& [k, p] : exact.prob) joint[k].second = p;
  for (const auto& [k, pq] : joint) {
    const auto [emp, ex] = pq;
    out.tv += 0.5 * std::fabs(emp - ex);
    const double p = ex > 0.0 ? ex : emp;
    out.err += 0.5 * std::sqrt(p * (1.0 - p) / R);
  }
  out.tv += 0.5 * exact.remainder;
  return out;
}

CriterionResult c5(const AcceptanceOptions& opt) {
  auto r = start(5, "distributional identities B-records ~ Y and F-records ~ Z at n = 3");
  const auto mc = chains::mc_path_tsaw(3, kBeta, 100000, stream(opt, 5));
  std::map<std::vector<long>, std::uint64_t> yb, zf;
  for (const auto& rec : mc.records) {
    ++yb[{static_cast<long>(rec.backward[2]), static_cast<long>(rec.backward[1]), static_cast<long>(rec.backward[0])}];
    ++zf[{static_cast<long>(rec.forward[0]), static_cast<long>(rec.forward[1]), static_cast<long>(rec.forward[2])}];
  }
  const std::uint64_t R = mc.records.size();
  const auto ty = tv_against(yb, R, chains::y_path_law(kBeta, 3));
  const auto tz = tv_against(zf, R, chains::z_path_law(kBeta, 3));
  r.passed = ty.tv < kSeFactor * ty.err && tz.tv < kSeFactor * tz.err && mc.discarded == 0;
  r.measured = "TV(B, Y) " + num(ty.tv, 4) + " vs MC error " + num(ty.err, 4) + "; TV(F, Z) " + num(tz.tv, 4) +
               " vs MC error " + num(tz.err, 4) + "; " + std::to_string(R) + " records";
  r.threshold = "TV < 4 x MC error";
  return r;
}

CriterionResult c6() {
  auto r = start(6, "excursion kernel decay exponent, K in {6,10}");
  r.passed = true;
  for (long K : {6L, 10L})
    for (auto kind : {renewal::WalkKind::S, renewal::WalkKind::Y}) {
      const auto ek = renewal::excursion_kernel(kind, kBeta, K, 1024, {K + 1});
      const double s = ek.diagonal_decay(K + 1, 64, 1024).slope;
      r.passed = r.passed && s >= kSlopeLo && s <= kSlopeHi;
      r.measured += std::string(renewal::to_string(kind)) + "(K=" + std::to_string(K) + ") " + num(s, 5) + " ";
    }
  r.threshold = "slope in [-1.65, -1.35] over n in [64, 1024]";
  return r;
}

CriterionResult c7() {
  auto r = start(7, "finite-volume harmonic profile h_N(x) - x bounded");
  std::vector<double> dev;
  for (int N : {100, 200, 400}) {
    dev.push_back(chains::harmonic_profile(N, kBeta).max_abs_deviation);
    r.measured += "N=" + std::to_string(N) + ": " + num(dev.back(), 5) + " ";
  }
  const double spread = *std::max_element(dev.begin(), dev.end()) / *std::min_element(dev.begin(), dev.end());
  r.passed = spread <= kHarmonicSpread;
  r.measured += "ratio " + num(spread, 4);
  r.threshold = "max/min <= 1.5";
  return r;
}

CriterionResult c8() {
  auto r = start(8, "survival exponent of the killed chain");
  const auto ks = chains::killed_series(2048, {}, chain_opt());
  std::vector<double> ms, vs;
  for (int m = 64; m <= 2048; m *= 2) {
    ms.push_back(m);
    vs.push_back(ks.survival[static_cast<std::size_t>(m)]);
  }
  const double s = stats::fit_loglog(ms, vs).slope;
  r.passed = s >= kSurvivalLo && s <= kSurvivalHi;
  r.measured = "slope " + num(s, 5);
  r.threshold = "in [-0.55, -0.45] over m in [64, 2048]";
  return r;
}

std::vector<int> grid_ns() {
  std::vector<int> ns(1024 - 64 + 1);
  std::iota(ns.begin(), ns.end(), 64);
  return ns;
}

// Per-n maxima: ratio of largest to smallest, and both extremes finite.
std::pair<double, std::string> spread_of(const std::vector<double>& per_n) {
  const double hi = *std::max_element(per_n.begin(), per_n.end());
  const double lo = *std::min_element(per_n.begin(), per_n.end());
  return {hi / lo, "per-n max in [" + num(lo, 5) + ", " + num(hi, 5) + "]"};
}

CriterionResult c9() {
  auto r = start(9, "interval estimate for the killed chain");
  const auto ns = grid_ns();
  const auto ks = chains::killed_series(1024, ns, chain_opt());
  std::vector<double> per_n;
  for (int n : ns) {
    const auto& law = ks.laws.at(n);
    double best = 0.0;
    const int jmax = static_cast<int>(std::floor(std::sqrt(n + 1.0)));
    for (int j = 2; j <= jmax; ++j) {
      const double v = law.sum_range(1, j - 1) * std::pow(n + 1.0, 1.5) / (static_cast<double>(j) * j);
      best = std::max(best, v);
    }
    per_n.push_back(best);
  }
  const auto [spread, text] = spread_of(per_n);
  r.passed = std::isfinite(spread) && spread < kGridSpread;
  r.measured = text + ", ratio " + num(spread, 4);
  r.threshold = "finite, max/min < 2 across n in [64, 1024]";
  return r;
}

CriterionResult c10() {
  auto r = start(10, "generalized ruin r_n^(j) / min(1, j/sqrt(n))");
  const auto ns = grid_ns();
  std::vector<int> ks;
  for (int n : ns) ks.push_back(n - 1);
  const auto laws = chains::y_laws(ks, chain_opt());
  std::vector<double> per_n;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const int n = ns[i];
    double best = 0.0;
    const int jmax = static_cast<int>(std::floor(std::sqrt(n + 1.0)));
    for (int j = 1; j <= jmax; ++j) {
      const double v = laws[i].sum_range(0, j - 1) / std::min(1.0, j / std::sqrt(static_cast<double>(n)));
      best = std::max(best, v);
    }
    per_n.push_back(best);
  }
  const auto [spread, text] = spread_of(per_n);
  r.passed = std::isfinite(spread) && spread < kGridSpread;
  r.measured = text + ", ratio " + num(spread, 4);
  r.threshold = "finite, max/min < 2 across n in [64, 1024]";
  return r;
}

CriterionResult c11(const AcceptanceOptions& opt) {
  auto r = start(11, "percolation marginals on the path, levels {2,10,50}");
  const auto path = tree::build_spherical_tree(tree::GrowthSpec::from_exponent(0.0, 50));
  const std::vector<int> levels{2, 10, 50};
  const auto me = perc::open_frequencies(path, kBeta, levels, {}, 100000, stream(opt, 11), opt.threads);
  const auto rs = chains::ruin_series(50, chain_opt());
  r.passed = true;
  for (const auto& l : me.levels) {
    const double exact = rs.r[static_cast<std::size_t>(l.level)];
    const double z = (l.p() - exact) / l.se();
    r.passed = r.passed && std::fabs(z) < kSeFactor;
    r.measured += "level " + std::to_string(l.level) + ": " + num(l.p(), 5) + " vs " + num(exact, 5) + " (z " +
                  num(z, 3) + ") ";
  }
  r.measured += "capped " + std::to_string(me.capped);
  r.threshold = "|z| < 4 SE";
  return r;
}

CriterionResult c12(const AcceptanceOptions& opt) {
  auto r = start(12, "phase transition trend, b = 0.3 vs b = 0.7");
  perc::PhaseOptions po;
  po.markers = {50, 100, 200};
  po.runs = 4000;
  po.walks = 4;
  po.threads = opt.threads;
  const std::vector<double> bs{0.3, 0.7};
  const auto rows = perc::phase_experiment(bs, kBeta, po, stream(opt, 12));
  for (const auto& row : rows) {
    r.measured += "b=" + num(row.b, 2) + ":";
    for (const auto& m : row.markers) r.measured += " " + num(m.p(), 4) + "+-" + num(m.se(), 2);
    r.measured += std::string(" -> ") + perc::to_string(row.trend) + "; ";
  }
  r.passed = rows[0].trend == perc::PhaseTrend::recurrent_consistent &&
             rows[1].trend == perc::PhaseTrend::transient_consistent;
  r.threshold = "b=0.3 strictly decreasing, b=0.7 last two markers within 2 SE";
  return r;
}

CriterionResult c13() {
  auto r = start(13, "adapted conductance scaling at |e| = 1000");
  const auto tab = perc::adapted_conductances(kBeta, 1000, kLeakBudget);
  const auto fit = ruin_constant();
  const double v = tab.c_over_sqrt(1000), target = 2.0 * fit.c_hat;
  const double rel = std::fabs(v - target) / target;
  r.passed = rel < kConductance;
  r.measured = "c/sqrt|e| " + num(v, 6) + " vs 2c " + num(target, 6) + " (rel " + num(rel, 3) + ")";
  r.threshold = "within 10%";
  return r;
}

CriterionResult c14(const AcceptanceOptions& opt) {
  auto r = start(14, "quasi-independence sweep, 50 stratified pairs on b = 0.7");
  const auto t = tree::build_spherical_tree(tree::GrowthSpec::from_exponent(0.7, 48));
  const auto pairs = perc::stratified_pairs(t, 50, stream(opt, 140));
  perc::QiOptions qo;
  qo.runs = 50000;
  qo.threads = opt.threads;
  const auto est = perc::qi_sweep(t, kBeta, pairs, qo, stream(opt, 14));
  double max_m = 0.0, max_m_se = 0.0, worst_z = 0.0;
  int mixture_fail = 0, widened = 0;
  bool finite = true;
  for (const auto& e : est) {
    finite = finite && std::isfinite(e.M) && std::isfinite(e.M_se);
    if (e.M > max_m) {
      max_m = e.M;
      max_m_se = e.M_se;
    }
    if (!e.mixture_ok(kSeFactor)) ++mixture_fail;
    if (e.mixture_se > 0.0) worst_z = std::max(worst_z, std::fabs(e.mixture_diff) / e.mixture_se);
    widened += e.widened;
  }
  r.passed = static_cast<int>(est.size()) == 50 && finite && mixture_fail == 0;
  r.measured = std::to_string(est.size()) + " pairs, max M " + num(max_m, 4) + " +- " + num(max_m_se, 2) +
               ", mixture identity fails on " + std::to_string(mixture_fail) + " pairs (worst z " + num(worst_z, 3) +
               "), " + std::to_string(widened) + " with widened SE, " + std::to_string(est.front().excluded) + "/" +
               std::to_string(est.front().runs) + " capped runs excluded";
  r.threshold = "max M finite with SE; mixture |diff| < 4 SE on every pair";
  return r;
}

CriterionResult c15() {
  auto r = start(15, "spectral constant vs fitted ruin constant");
  std::vector<long> Ks;
  for (long K = 4; K <= 24; K += 2) Ks.push_back(K);
  const auto sweep = renewal::k_sweep(kBeta, Ks, {}, kGammaStep);
  const auto fit = ruin_constant();
  r.measured = "gamma_K:";
  for (const auto& e : sweep.entries) r.measured += " " + std::to_string(e.K) + ":" + num(e.gamma, 5);
  if (sweep.K_stable < 0) {
    r.passed = false;
    r.measured += "; no K_stable in the sweep";
  } else {
    const auto it = std::find_if(sweep.entries.begin(), sweep.entries.end(),
                                 [&](const auto& e) { return e.K == sweep.K_stable; });
    const double rel = std::fabs(it->c_star - fit.c_hat) / fit.c_hat;
    r.passed = rel < kConstantMatch && !it->unstable;
    r.measured += "; K_stable " + std::to_string(sweep.K_stable) + ", later steps <= " +
                  num(sweep.max_gamma_step_after, 3) + "; c* " + num(it->c_star, 7) + " vs fitted " +
                  num(fit.c_hat, 7) + " (rel " + num(rel, 3) + ")";
  }
  r.threshold = "gamma_K steps < 10% from K_stable on; c* within 15%";
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = c1(); break;
    case 2: r = c2(); break;
    case 3: r = c3(opt); break;
    case 4: r = c4(); break;
    case 5: r = c5(opt); break;
    case 6: r = c6(); break;
    case 7: r = c7(); break;
    case 8: r = c8(); break;
    case 9: r = c9(); break;
    case 10: r = c10(); break;
    case 11: r = c11(opt); break;
    case 12: r = c12(opt); break;
    case 13: r = c13(); break;
    case 14: r = c14(opt); break;
    case 15: r = c15(); break;
    default: throw std::out_of_range("criterion id must be in 1..15");
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& progress) {
  std::vector<int> ids = opt.only;
  if (ids.empty())
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    out.push_back(run_criterion(id, opt));
    if (progress) progress(out.back());
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  char head[32];
  std::snprintf(head, sizeof head, "%s %2d ", r.passed ? "PASS" : "FAIL", r.id);
  return std::string(head) + r.name + " | " + r.measured + " | need " + r.threshold;
}

}  // namespace tsaw::acceptance
