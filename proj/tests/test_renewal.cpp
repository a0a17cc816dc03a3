#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tsaw/error.hpp"
#include "tsaw/path_chains.hpp"
#include "tsaw/renewal.hpp"
#include "tsaw/rng.hpp"

using namespace tsaw;
using namespace tsaw::renewal;

namespace {

const LadderData& ladder() {
  static const LadderData d = ladder_law(1.0);
  return d;
}

const FirstReturnData& first_return_k4() {
  static const FirstReturnData d = first_return_matrix(4, 1.0);
  return d;
}

}  // namespace

TEST(Ladder, RenewalFunctionBoundaryAndGrowth) {
  const auto& d = ladder();
  EXPECT_EQ(d.H_at(0), 0.0);
  EXPECT_EQ(d.H_at(-3), 0.0);
  EXPECT_NEAR(d.H_at(1), 1.0, 1e-15);
  EXPECT_NEAR(d.H_at(200) / 200.0, 1.0 / d.mean, 0.05 / d.mean);
  for (long u = 1; u < 300; ++u) EXPECT_GE(d.H_at(u + 1), d.H_at(u));
}

TEST(Ladder, LawIsNormalised) {
  const auto& d = ladder();
  double s = 0.0;
  for (double c : d.chi) {
    EXPECT_GE(c, 0.0);
    s += c;
  }
  EXPECT_EQ(d.chi[0], 0.0);
  EXPECT_NEAR(s + d.unassigned, 1.0, 1e-12);
  EXPECT_LT(d.unassigned, 1e-3);
}

TEST(Ladder, MatchesSimulatedLadderHeights) {
  // Independent check: draw increments from the discrete Gaussian directly.
  const long J = 8;
  std::vector<double> cdf;
  double z = 0.0;
  for (long j = -J; j <= J; ++j) z += std::exp(-1.0 * j * j);
  double acc = 0.0;
  for (long j = -J; j <= J; ++j) {
    acc += std::exp(-1.0 * j * j) / z;
    cdf.push_back(acc);
  }
  Rng rng(2024);
  const int reps = 20000;
  const long cap = 20000;
  std::vector<int> counts(4, 0);
  int unfinished = 0;
  for (int r = 0; r < reps; ++r) {
    long s = 0;
    long t = 0;
    while (s <= 0 && t < cap) {
      const double u = rng.uniform();
      const long j = static_cast<long>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) - J;
      s += j;
      ++t;
    }
    if (s <= 0) ++unfinished;
    else if (s < 4) ++counts[static_cast<std::size_t>(s)];
  }
  const double slack = static_cast<double>(unfinished) / reps;
  for (int k = 1; k <= 2; ++k) {
    const double p = static_cast<double>(counts[static_cast<std::size_t>(k)]) / reps;
    const double se = std::sqrt(p * (1 - p) / reps);
    EXPECT_NEAR(ladder().chi[static_cast<std::size_t>(k)], p, 4 * se + slack) << "height " << k;
  }
}

TEST(SKernel, RowsAreTheStationaryIncrements) {
  const auto k = build_s_kernel(1.0, 20);
  const auto law = chains::stationary_data(1.0);
  EXPECT_NEAR(k.at(10, 10), law.nu_at(0), 1e-15);
  EXPECT_NEAR(k.at(10, 12), law.nu_at(2), 1e-15);
  EXPECT_NEAR(k.at(10, 7), law.nu_at(-3), 1e-15);
}

TEST(ExcursionKernels, OneStepAndSymmetry) {
  const long K = 6;
  const auto ks = excursion_kernel(WalkKind::S, 1.0, K, 64, {7, 9, 12});
  const auto law = chains::stationary_data(1.0);
  EXPECT_NEAR(ks.p(1, 7, 9), law.nu_at(2), 1e-15);
  EXPECT_EQ(ks.p(0, 7, 7), 1.0);
  EXPECT_EQ(ks.p(3, 7, K), 0.0);
  for (int n = 1; n <= 64; ++n) {
    EXPECT_NEAR(ks.p(n, 7, 9), ks.p(n, 9, 7), 1e-15);
    EXPECT_NEAR(ks.p(n, 9, 12), ks.p(n, 12, 9), 1e-15);
  }
}

TEST(ExcursionKernels, DiagonalDecayOnBothWalks) {
  for (WalkKind kind : {WalkKind::S, WalkKind::Y}) {
    const auto ks = excursion_kernel(kind, 1.0, 6, 1024, {7});
    const double slope = ks.diagonal_decay(7, 64, 1024).slope;
    EXPECT_GT(slope, -1.7) << to_string(kind);
    EXPECT_LT(slope, -1.3) << to_string(kind);
  }
}

TEST(KernelGap, NonNegativeAndDecaying) {
  const std::vector<long> xs{8, 10, 12, 14, 16, 20};
  const auto rep = killed_kernel_gap(1.0, 6, xs, ladder());
  for (double v : rep.value) EXPECT_GE(v, 0.0);
  EXPECT_LT(rep.fit.slope, 0.0);
}

TEST(FirstReturn, RowsSumToOneAndRoutesAgree) {
  const auto& f = first_return_k4();
  ASSERT_EQ(f.states, 5u);
  EXPECT_LT(f.max_row_deficit, 1e-6);
  EXPECT_LE(f.series_gap, f.series_tail_bound + 1e-6);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t v = 0; v < 5; ++v) EXPECT_GE(f.P(u, v), 0.0);
}

TEST(FirstReturn, OneStepKernelIsTheChainKernel) {
  const auto& f = first_return_k4();
  const auto q = chains::build_y_kernel(1.0, 4, chains::default_eta_window(1.0));
  for (long u = 0; u <= 4; ++u)
    for (long v = 0; v <= 4; ++v) EXPECT_NEAR(f.k(1, u, v), q.at(u, v), 1e-15) << u << "," << v;
}

TEST(Perron, TwoStateClosedForm) {
  linalg::Matrix P(2, 2);
  P(0, 0) = 0.7;
  P(0, 1) = 0.3;
  P(1, 0) = 0.2;
  P(1, 1) = 0.8;
  const auto r = perron(P);
  EXPECT_NEAR(r.pi[0], 0.4, 1e-10);
  EXPECT_NEAR(r.pi[1], 0.6, 1e-10);
  EXPECT_LT(r.residual, 1e-12);
}

TEST(Perron, RejectsNonStochastic) {
  linalg::Matrix P(2, 2);
  P(0, 0) = 0.5;
  P(1, 1) = 1.0;
  EXPECT_THROW(perron(P), NumericBudgetError);
  P(0, 1) = 0.6;
  P(0, 0) = -0.1;
  EXPECT_THROW(perron(P), ValidationError);
}

TEST(Lambda, NonNegativeWithPositiveConstant) {
  const auto lr = lambda_extraction(first_return_k4());
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t v = 0; v < 5; ++v) EXPECT_GE(lr.Lambda(u, v), -1e-8);
  EXPECT_GT(lr.gamma, 0.0);
  EXPECT_GT(lr.c_star, 0.0);
  EXPECT_LT(lr.pi_residual, 1e-10);
}

TEST(RuinConstant, RecoversSyntheticConstant) {
  const std::vector<int> ns{256, 512, 1024, 2048};
  std::vector<double> r;
  for (int n : ns) r.push_back((0.8 + 0.3 / std::sqrt(n) - 0.5 / n) / std::sqrt(n));
  const auto f = fit_ruin_constant(ns, r);
  EXPECT_NEAR(f.c_hat, 0.8, 1e-10);
  EXPECT_THROW(fit_ruin_constant(std::vector<int>{1, 2}, std::vector<double>{1, 1}), ValidationError);
}

TEST(RuinConstant, MonteCarloAgreesAtModerateLength) {
  chains::ChainOptions o;
  const auto rs = chains::ruin_series(2048, o);
  const std::vector<int> ns{256, 512, 1024, 2048};
  std::vector<double> r;
  for (int n : ns) r.push_back(rs.r[static_cast<std::size_t>(n)]);
  const double c = fit_ruin_constant(ns, r).c_hat;
  const auto f = chains::mc_ruin_frequency(400, 1.0, 100000, 77);
  EXPECT_NEAR(f.p(), rs.r[400], 4 * f.se());
  EXPECT_NEAR(rs.r[400] * 20.0, c, 0.03 * c);
}
