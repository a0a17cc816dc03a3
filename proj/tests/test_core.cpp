#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "tsaw/linalg.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/simd/kernels.hpp"
#include "tsaw/stats.hpp"

using namespace tsaw;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return v;
}

}  // namespace

TEST(Simd, Avx2MatchesScalarBitForBitOnAxpyAndScale) {
  const simd::KernelTable* avx = simd::avx2_table();
  if (!avx) GTEST_SKIP() << "AVX2 variant unavailable";
  const auto& ref = simd::scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
    const auto x = random_vector(n, 11 + n);
    auto y1 = random_vector(n, 99 + n), y2 = y1;
    ref.axpy(0.37, x.data(), y1.data(), n);
    avx->axpy(0.37, x.data(), y2.data(), n);
    EXPECT_EQ(y1, y2) << "n=" << n;
    ref.scale(-1.25, y1.data(), n);
    avx->scale(-1.25, y2.data(), n);
    EXPECT_EQ(y1, y2) << "n=" << n;
  }
}

TEST(Simd, ReductionsAgreeUpToSummationOrder) {
  const simd::KernelTable* avx = simd::avx2_table();
  if (!avx) GTEST_SKIP() << "AVX2 variant unavailable";
  const auto& ref = simd::scalar_table();
  const auto x = random_vector(777, 1), y = random_vector(777, 2);
  EXPECT_NEAR(ref.dot(x.data(), y.data(), x.size()), avx->dot(x.data(), y.data(), x.size()), 1e-12);
  EXPECT_NEAR(ref.sum(x.data(), x.size()), avx->sum(x.data(), x.size()), 1e-12);
  EXPECT_NEAR(ref.abs_diff_sum(x.data(), y.data(), x.size()), avx->abs_diff_sum(x.data(), y.data(), x.size()),
              1e-12);
}

TEST(Simd, OverrideSelectsTable) {
  simd::override_active(&simd::scalar_table());
  EXPECT_STREQ(simd::active().name, simd::scalar_table().name);
  simd::override_active(nullptr);
}

TEST(Rng, DerivedSeedsDifferAcrossReplicas) {
  EXPECT_NE(derive_replica_seed(42, 0), derive_replica_seed(42, 1));
  EXPECT_EQ(derive_replica_seed(42, 7), derive_replica_seed(42, 7));
}

TEST(Rng, MillionDerivedSeedsHaveNoCollision) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2'000'000);
  for (std::uint64_t i = 0; i < 1'000'000; ++i) ASSERT_TRUE(seen.insert(derive_replica_seed(1, i)).second) << i;
}

TEST(Rng, CounterExponentialIsAFunctionOfItsKey) {
  EXPECT_EQ(counter_exponential(5, 17, 3), counter_exponential(5, 17, 3));
  EXPECT_NE(counter_exponential(5, 17, 3), counter_exponential(5, 17, 4));
  EXPECT_NE(counter_exponential(5, 17, 3), counter_exponential(5, 18, 3));
  stats::Moments m;
  for (std::uint64_t i = 0; i < 200000; ++i) {
    const double x = counter_exponential(9, i % 97, i);
    ASSERT_GT(x, 0.0);
    m.add(x);
  }
  EXPECT_NEAR(m.mean(), 1.0, 4 * m.se_mean());
}

TEST(Rng, UniformStaysInOpenInterval) {
  EXPECT_GT(open_unit(0), 0.0);
  EXPECT_LT(open_unit(~0ULL), 1.0);
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Stats, LineFitRecoversExactLine) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 - 0.75 * v);
  const auto f = stats::fit_line(x, y);
  EXPECT_NEAR(f.slope, -0.75, 1e-14);
  EXPECT_NEAR(f.intercept, 2.5, 1e-14);
  EXPECT_NEAR(f.rms_residual, 0.0, 1e-14);
}

TEST(Stats, LogLogFitRecoversPowerLaw) {
  std::vector<double> x, y;
  for (double n = 64; n <= 4096; n *= 2) {
    x.push_back(n);
    y.push_back(3.0 * std::pow(n, -1.5));
  }
  EXPECT_NEAR(stats::fit_loglog(x, y).slope, -1.5, 1e-12);
}

TEST(Stats, ThroughOriginFitSolvesNormalEquations) {
  std::vector<double> a{1, 2, 3, 4}, b{1, 4, 9, 16}, y;
  for (std::size_t i = 0; i < a.size(); ++i) y.push_back(0.5 * a[i] - 2.0 * b[i]);
  const std::vector<std::vector<double>> cols{a, b};
  const auto f = stats::fit_through_origin(cols, y);
  EXPECT_NEAR(f.coef[0], 0.5, 1e-12);
  EXPECT_NEAR(f.coef[1], -2.0, 1e-12);
}

TEST(Stats, MomentsMergeMatchesSinglePass) {
  stats::Moments all, left, right;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(i * 0.37);
    all.add(x);
    (i < 40 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_NEAR(left.mean(), all.mean(), 1e-14);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-13);
}

TEST(Linalg, DenseLuSolvesKnownSystem) {
  linalg::Matrix a(3, 3);
  const double v[3][3] = {{0, 2, 1}, {1, 1, 1}, {4, -1, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = v[i][j];
  const std::vector<double> x{1, -2, 3}, b{-1, 2, 15};
  linalg::DenseLU lu(a);
  const auto sol = lu.solve(b);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(sol[i], x[i], 1e-13);
  EXPECT_LT(linalg::residual_inf(a, sol, b), 1e-13);
}

TEST(Linalg, BandedLuAgreesWithDenseLu) {
  const std::size_t n = 60, kl = 3, ku = 5;
  linalg::BandedMatrix band(n, kl, ku);
  linalg::Matrix dense(n, n);
  Rng rng(4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i >= kl ? i - kl : 0); j <= std::min(n - 1, i + ku); ++j) {
      const double val = (i == j ? 1.0 : 0.0) - 0.1 * rng.uniform();
      band.at(i, j) = val;
      dense(i, j) = val;
    }
  std::vector<double> b(n);
  for (auto& x : b) x = rng.uniform();
  const auto Ab = band.multiply(b);
  const auto Ad = [&] {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += dense(i, j) * b[j];
    return out;
  }();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(Ab[i], Ad[i], 1e-14);
  auto xb = b;
  linalg::BandedLU(band).solve_in_place(xb);
  const auto xd = linalg::DenseLU(dense).solve(b);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(xb[i], xd[i], 1e-12);
}
