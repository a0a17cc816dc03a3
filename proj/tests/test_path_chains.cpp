#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tsaw/error.hpp"
#include "tsaw/path_chains.hpp"
#include "tsaw/stats.hpp"

using namespace tsaw;
using namespace tsaw::chains;

namespace {

ChainOptions opts(double beta = 1.0) {
  ChainOptions o;
  o.beta = beta;
  return o;
}

// Exact ruin by depth-first enumeration of walk paths on {0..n}, pruned below
// a probability cutoff. Independent of the chain representation.
struct RuinEnumeration {
  double hit = 0.0, pruned = 0.0;
};

void enumerate(int n, double beta, int x, std::vector<int>& L, double prob, RuinEnumeration& out) {
  if (x == n) {
    out.hit += prob;
    return;
  }
  if (x == 0) return;
  if (prob < 1e-16) {
    out.pruned += prob;
    return;
  }
  const double wl = std::exp(-beta * L[static_cast<std::size_t>(x)]);
  const double wr = std::exp(-beta * L[static_cast<std::size_t>(x + 1)]);
  const double pr = wr / (wl + wr);
  ++L[static_cast<std::size_t>(x + 1)];
  enumerate(n, beta, x + 1, L, prob * pr, out);
  --L[static_cast<std::size_t>(x + 1)];
  ++L[static_cast<std::size_t>(x)];
  enumerate(n, beta, x - 1, L, prob * (1.0 - pr), out);
  --L[static_cast<std::size_t>(x)];
}

RuinEnumeration ruin_by_enumeration(int n, double beta) {
  std::vector<int> L(static_cast<std::size_t>(n + 1), 0);  // L[k]: crossings of edge {k-1, k}
  L[1] = 1;
  RuinEnumeration out;
  enumerate(n, beta, 1, L, 1.0, out);
  return out;
}

double tv_to_exact(const PathMonteCarlo& mc, const PathLaw& exact, bool backward, int n, double& err) {
  std::map<std::vector<long>, double> emp;
  for (const auto& r : mc.records) {
    std::vector<long> key;
    for (int i = 0; i < n; ++i)
      key.push_back(backward ? r.backward[static_cast<std::size_t>(n - 1 - i)] : r.forward[static_cast<std::size_t>(i)]);
    emp[key] += 1.0 / static_cast<double>(mc.records.size());
  }
  std::map<std::vector<long>, std::pair<double, double>> joint;
  for (const auto& [k, p] : emp) joint[k].first = p;
  for (const auto& [k, p] : exact.prob) joint[k].second = p;
  double tv = 0.5 * exact.remainder;
  err = 0.0;
  const double R = static_cast<double>(mc.records.size());
  for (const auto& [k, pq] : joint) {
    tv += 0.5 * std::fabs(pq.first - pq.second);
    const double p = pq.second > 0 ? pq.second : pq.first;
    err += 0.5 * std::sqrt(p * (1 - p) / R);
  }
  return tv;
}

}  // namespace

TEST(LocalParams, ClosedFormsAndMonotonicity) {
  const LocalParams lp(1.0);
  for (long u = -5; u < 40; ++u) {
    EXPECT_GT(lp.p(u), 0.0);
    EXPECT_LT(lp.p(u), 1.0);
    EXPECT_NEAR(lp.p(u) + lp.q(u), 1.0, 1e-15);
    EXPECT_LT(lp.p(u + 1), lp.p(u));
  }
  EXPECT_NEAR(lp.p(0), std::exp(-1.0) / (1 + std::exp(-1.0)), 1e-16);
}

TEST(EtaKernel, FirstRowValues) {
  const LocalParams lp(1.0);
  const auto row = eta_row(lp, 0, default_eta_window(1.0));
  EXPECT_NEAR(row.at(-1), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(row.at(-1), 0.73106, 1e-5);
  EXPECT_NEAR(row.at(0), lp.q(1) * lp.p(0), 1e-15);
  EXPECT_NEAR(row.at(0), 0.25618, 1e-5);
  EXPECT_EQ(row.at(-2), 0.0);
}

TEST(EtaKernel, PowerRowsAreStochasticUpToLeak) {
  const auto rows = eta_power_rows(1.0, 30, default_eta_window(1.0));
  for (const auto& r : rows) EXPECT_NEAR(r.total() + r.leaked(), 1.0, 1e-14);
}

TEST(EtaKernel, NarrowWindowReportsRequiredWidth) {
  try {
    eta_power_rows(1.0, 5, EtaWindow{-2, 2});
    FAIL() << "expected a leak error";
  } catch (const LeakBudgetExceeded& e) {
    EXPECT_GT(e.leak(), e.budget());
    EXPECT_GT(e.required_width(), 2);
  }
}

TEST(EtaKernel, MixingTowardStationaryLaw) {
  const auto window = default_eta_window(1.0);
  const auto tv = eta_mixing_profile(1.0, 30, window);
  std::vector<double> m, v;
  for (std::size_t i = 1; i < tv.size(); ++i)
    if (tv[i] > 1e-13) {
      m.push_back(static_cast<double>(i));
      v.push_back(tv[i]);
    }
  ASSERT_GE(m.size(), 3u);
  EXPECT_LT(stats::fit_loglinear(m, v).slope, 0.0);
}

TEST(StationaryLaw, GaussianWeightsAndVariance) {
  const auto law = stationary_data(1.0);
  double z = 0.0, s2 = 0.0;
  for (int j = -40; j <= 40; ++j) {
    z += std::exp(-1.0 * j * j);
    s2 += j * j * std::exp(-1.0 * j * j);
  }
  EXPECT_NEAR(law.nu_at(0), 1.0 / z, 1e-14);
  EXPECT_NEAR(law.nu_at(0), 0.5641, 1e-4);
  EXPECT_NEAR(law.sigma2, s2 / z, 1e-13);
  // Reference value 0.4991 agrees to the third decimal; the series gives 0.49898.
  EXPECT_NEAR(law.sigma2, 0.4991, 3e-4);
  for (long j = 1; j < 10; ++j) EXPECT_EQ(law.nu_at(j), law.nu_at(-j));
  EXPECT_EQ(law.rho_at(-1), law.nu_at(0));
  EXPECT_LT(stationarity_defect(law, default_eta_window(1.0)), 1e-10);
}

TEST(StationaryLaw, RatioBoundIsFinite) {
  const auto rb = eta_ratio_bound(1.0, 30, default_eta_window(1.0));
  EXPECT_TRUE(std::isfinite(rb.constant));
  EXPECT_GT(rb.constant, 0.0);
  EXPECT_GT(rb.pairs, 100u);
}

TEST(YKernel, RowsAndAccessibility) {
  const auto window = default_eta_window(1.0);
  const auto q = build_y_kernel(1.0, 60, window);
  const LocalParams lp(1.0);
  EXPECT_NEAR(q.at(0, 0), lp.q(0), 1e-15);
  for (long z = 0; z <= 60; ++z) {
    double s = 0.0;
    for (double v : q.row(z)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s + q.row_leak(z), 1.0, 1e-13);
    if (z <= 10) {
      EXPECT_GT(q.at(z, 0), 0.0);
    }
  }
}

TEST(Ruin, SmallCases) {
  const auto rs = ruin_series(4, opts());
  EXPECT_DOUBLE_EQ(rs.r[1], 1.0);
  EXPECT_NEAR(rs.r[2], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(rs.r[2], 0.73106, 1e-5);
  const auto y1 = y_evolve(1, opts());
  EXPECT_DOUBLE_EQ(y1.at(0), 1.0);
}

TEST(Ruin, MatchesPathEnumeration) {
  for (double beta : {0.5, 1.0, 2.0}) {
    const auto rs = ruin_series(5, opts(beta));
    for (int n = 2; n <= 5; ++n) {
      const auto e = ruin_by_enumeration(n, beta);
      EXPECT_NEAR(rs.r[static_cast<std::size_t>(n)], e.hit, e.pruned + 1e-13) << "beta " << beta << " n " << n;
    }
  }
}

TEST(Ruin, YAndZRoutesAgree) {
  const auto rs = ruin_series(300, opts());
  const auto zs = z_series(300, opts());
  for (int n = 1; n <= 300; ++n)
    EXPECT_NEAR(rs.r[static_cast<std::size_t>(n)], zs.survive[static_cast<std::size_t>(n)], 1e-12) << n;
}

TEST(Ruin, MonotoneAndMassConserving) {
  const auto rs = ruin_series(1000, opts());
  for (int n = 2; n <= 1000; ++n) EXPECT_LE(rs.r[static_cast<std::size_t>(n)], rs.r[static_cast<std::size_t>(n - 1)]);
  for (int n : {10, 100, 500}) {
    const auto law = y_evolve(n, opts());
    EXPECT_NEAR(law.total() + law.leaked(), 1.0, 1e-13);
    EXPECT_LT(law.leaked(), 1e-10);
  }
}

TEST(Ruin, LeakBudgetIsEnforced) {
  ChainOptions o = opts();
  o.height = 3;
  EXPECT_THROW(y_evolve(200, o), LeakBudgetExceeded);
}

TEST(ZChain, StartsAtOneAndHasBoundedMoments) {
  const auto z1 = z_evolve(1, opts());
  EXPECT_DOUBLE_EQ(z1.at(1), 1.0);
  const auto zs = z_series(1024, opts());
  double max_mean = 0.0;
  std::vector<double> second_ratio;
  for (int n = 1; n <= 1024; ++n) max_mean = std::max(max_mean, zs.mean[static_cast<std::size_t>(n)]);
  for (int n = 64; n <= 1024; n *= 2) second_ratio.push_back(zs.second[static_cast<std::size_t>(n)] / std::sqrt(n));
  EXPECT_LT(max_mean, 2.0);
  EXPECT_LT(*std::max_element(second_ratio.begin(), second_ratio.end()) /
                *std::min_element(second_ratio.begin(), second_ratio.end()),
            1.5);
}

TEST(GeneralizedRuin, WidthOneIsRuinAndMonotoneInWidth) {
  const auto rs = ruin_series(200, opts());
  for (int n : {5, 50, 200}) {
    EXPECT_NEAR(gen_ruin(n, 1, opts()), rs.r[static_cast<std::size_t>(n)], 1e-15);
    double prev = 0.0;
    for (int j = 1; j <= 30; ++j) {
      const double g = gen_ruin(n, j, opts());
      EXPECT_GE(g, prev);
      prev = g;
    }
    const auto law = y_evolve(n, opts());
    EXPECT_NEAR(gen_ruin(n, 100000, opts()), law.total(), 1e-15);
  }
}

TEST(Survival, SmallValuesAndExponent) {
  EXPECT_DOUBLE_EQ(survival(0, opts()), 1.0);
  EXPECT_NEAR(survival(1, opts()), 1.0 - 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(survival(1, opts()), 0.26894, 1e-5);
  const auto ks = killed_series(2048, {}, opts());
  std::vector<double> m, s;
  for (int x = 64; x <= 2048; x *= 2) {
    m.push_back(x);
    s.push_back(ks.survival[static_cast<std::size_t>(x)]);
  }
  const double slope = stats::fit_loglog(m, s).slope;
  EXPECT_GE(slope, -0.55);
  EXPECT_LE(slope, -0.45);
}

TEST(KilledInterval, EmptyIntervalAndSubsetBound) {
  EXPECT_EQ(killed_interval_mass(100, 1, opts()), 0.0);
  for (int n : {64, 256})
    for (int j : {2, 5, 8}) EXPECT_LE(killed_interval_mass(n, j, opts()), survival(n, opts()));
}

TEST(Harmonic, BoundaryAndRange) {
  for (int N : {10, 100}) {
    const auto h = harmonic_profile(N, 1.0);
    EXPECT_EQ(h.h[0], 0.0);
    for (double v : h.h) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, N);
    }
    EXPECT_LT(h.residual, 1e-10);
  }
}

TEST(StepLaw, JumpLawProperties) {
  const std::vector<long> zs{0, 1, 2, 4, 8, 12, 16, 24};
  const auto rep = step_law_checks(1.0, zs);
  for (const auto& p : rep.points) {
    EXPECT_EQ(p.lowest_jump_mass, 0.0);
    EXPECT_LT(p.tail_slope, 0.0);
  }
  EXPECT_LT(rep.tv_fit.slope, 0.0);
  EXPECT_NEAR(rep.points.back().m2, rep.sigma2, 1e-8);
  EXPECT_NEAR(rep.points.back().m1, 0.0, 1e-8);
}

TEST(PathMonteCarlo, BoundaryRecords) {
  const auto mc = mc_path_tsaw(5, 1.0, 2000, 3);
  ASSERT_EQ(mc.records.size(), 2000u);
  for (const auto& r : mc.records) {
    EXPECT_EQ(r.backward[4], 0u);
    EXPECT_EQ(r.forward[0], 1u);
  }
}

TEST(PathMonteCarlo, BackwardAndForwardRecordsMatchChainLaws) {
  for (int n : {2, 4}) {
    const auto mc = mc_path_tsaw(n, 1.0, 100000, 100 + n);
    double err = 0.0;
    const double tvb = tv_to_exact(mc, y_path_law(1.0, n), true, n, err);
    EXPECT_LT(tvb, 4.0 * err) << "backward n=" << n;
    const double tvf = tv_to_exact(mc, z_path_law(1.0, n), false, n, err);
    EXPECT_LT(tvf, 4.0 * err) << "forward n=" << n;
  }
}

TEST(PathMonteCarlo, RuinFrequencyMatchesExact) {
  const auto f = mc_ruin_frequency(10, 1.0, 100000, 17);
  const double r = ruin_series(10, opts()).r[10];
  EXPECT_LT(std::fabs(f.p() - r), 4.0 * f.se());
}
