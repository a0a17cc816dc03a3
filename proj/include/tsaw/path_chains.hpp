#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsaw/stats.hpp"

namespace tsaw::chains {

// p(u) = e^{-beta(2u+1)} / (1 + e^{-beta(2u+1)}), q(u) = 1 - p(u), evaluated in log space.
class LocalParams {
 public:
  explicit LocalParams(double beta);
  double beta() const { return beta_; }
  double log_p(long u) const;
  double log_q(long u) const;
  double p(long u) const;
  double q(long u) const;

 private:
  double beta_;
};

// Probability vector on the integer window [lo, lo+size) plus mass lost outside it.
class TruncatedDistribution {
 public:
  TruncatedDistribution() = default;
  TruncatedDistribution(long lo, std::vector<double> mass, double leaked = 0.0);
  static TruncatedDistribution point_mass(long at);

  long lo() const { return lo_; }
  long hi() const { return lo_ + static_cast<long>(mass_.size()) - 1; }
  std::size_t size() const { return mass_.size(); }
  double at(long k) const;
  std::span<const double> masses() const { return mass_; }
  double leaked() const { return leaked_; }
  double total() const;
  // Sum over [a, b] intersected with the window.
  double sum_range(long a, long b) const;
  double moment(int order) const;

 private:
  long lo_ = 0;
  std::vector<double> mass_;
  double leaked_ = 0.0;
};

struct EtaWindow {
  long lo = 0;
  long hi = 0;
};

// Window [-W-1, W] with W = ceil(sqrt(60/beta)) + 2; Gaussian tails beyond it are < e^{-60}.
EtaWindow default_eta_window(double beta);

// Row P(u, .) of the eta kernel inside the window; mass outside goes to leaked().
TruncatedDistribution eta_row(const LocalParams& lp, long u, EtaWindow window);

// Rows P^m(start, .) for m = 0..m_max (row 0 is the point mass). Throws
// LeakBudgetExceeded if any row leaks more than row_leak_budget.
std::vector<TruncatedDistribution> eta_power_rows(double beta, int m_max, EtaWindow window, long start = 0,
                                                  double row_leak_budget = 1e-15);

// Markov kernel on {0, 1, ...} stored row by row as contiguous bands.
class BandedRows {
 public:
  std::size_t rows() const { return first_.size(); }
  long first(long z) const { return first_[static_cast<std::size_t>(z)]; }
  std::span<const double> row(long z) const;
  double row_leak(long z) const { return leak_[static_cast<std::size_t>(z)]; }
  double at(long z, long y) const;
  void append_row(long first, std::span<const double> values, double leak);

 private:
  std::vector<long> first_;
  std::vector<std::size_t> offset_{0};
  std::vector<double> data_;
  std::vector<double> leak_;
};

// Q(z, y) = P^{z+1}(0, y-z-1) for z = 0..max_state.
BandedRows build_y_kernel(double beta, long max_state, EtaWindow window);
// P(Z_{k+1} = y | Z_k = z) = P^z(-1, y-z-1) for z = 0..max_state; row 0 is the point mass at 0.
BandedRows build_z_kernel(double beta, long max_state, EtaWindow window);

// Height ceil(8 sqrt(n)) + 64.
long truncation_height(long n);

// Evolution of a law under a banded kernel on {0..height}. Mass sent above
// height or lost in the kernel rows is added to leaked(); exceeding the
// budget throws LeakBudgetExceeded.
class BandedChain {
 public:
  BandedChain(const BandedRows& kernel, long height, double leak_budget, std::string label);
  void set_point_mass(long at);
  void step();
  // Removes the mass at state s and books it as absorbed.
  double absorb(long s);
  double at(long k) const { return k >= 0 && k <= height_ ? mass_[static_cast<std::size_t>(k)] : 0.0; }
  double leaked() const { return leaked_; }
  double absorbed() const { return absorbed_; }
  double total() const;
  double sum_range(long a, long b) const;
  long height() const { return height_; }
  TruncatedDistribution snapshot() const;

 private:
  const BandedRows* kernel_;
  long height_;
  double budget_;
  std::string label_;
  std::vector<double> mass_, next_;
  std::vector<double> above_;  // row mass above height
  long active_lo_ = 0, active_hi_ = -1;
  double leaked_ = 0.0;
  double absorbed_ = 0.0;
};

struct ChainOptions {
  double beta = 1.0;
  double leak_budget = 1e-10;
  long height = 0;  // 0: truncation policy from the number of steps
};

// Law of Y_{n-1} from Y_0 = 0.
TruncatedDistribution y_evolve(int n, const ChainOptions& opt);
// Law of Z_n from Z_1 = 1.
TruncatedDistribution z_evolve(int n, const ChainOptions& opt);

struct RuinSeries {
  std::vector<double> r;     // r[n] for n = 0..n_max; r[0] unused (NaN)
  std::vector<double> leak;  // leaked mass of the law of Y_{n-1}
  long height = 0;
};
RuinSeries ruin_series(int n_max, const ChainOptions& opt);

struct ZSeries {
  std::vector<double> survive;  // P(Z_n >= 1), n = 0..n_max (index 0 unused)
  std::vector<double> mean;     // E[Z_n]
  std::vector<double> second;   // E[Z_n^2]
  std::vector<double> leak;
  long height = 0;
};
ZSeries z_series(int n_max, const ChainOptions& opt);

// Laws of Y_k (from 0) at the requested k values (sorted ascending).
std::vector<TruncatedDistribution> y_laws(std::span<const int> ks, const ChainOptions& opt);

// P_0(Y_{n-1} <= j-1).
double gen_ruin(int n, int j, const ChainOptions& opt);

struct KilledSeries {
  std::vector<double> survival;                // P_0(sigma_0^+ > m), m = 0..m_max
  std::vector<double> leak;
  std::map<int, TruncatedDistribution> laws;   // sub-probability law of Y_n on {sigma_0^+ > n}
  long height = 0;
};
// Y started at 0 with state 0 absorbing after time 0.
KilledSeries killed_series(int m_max, std::span<const int> keep_laws, const ChainOptions& opt);
double survival(int m, const ChainOptions& opt);
// P_0(Y_n in {1..j-1}, sigma_0^+ > n).
double killed_interval_mass(int n, int j, const ChainOptions& opt);

struct HarmonicProfile {
  int N = 0;
  std::vector<double> h;  // h_N(x), x = 0..N-1
  double max_abs_deviation = 0.0;  // max_x |h_N(x) - x|
  double residual = 0.0;
  double pivot_ratio = 0.0;
  double kernel_leak = 0.0;
};
HarmonicProfile harmonic_profile(int N, double beta);

struct StepLawPoint {
  long z = 0;
  double tv_to_nu = 0.0;  // sum_j |mu_z(j) - nu(j)|
  double m1 = 0.0;
  double m2 = 0.0;
  std::vector<double> tail;  // tail[m] = P(|Y_1 - z| >= m | Y_0 = z)
  double tail_slope = 0.0;
  double lowest_jump_mass = 0.0;  // sum_{j < -z} mu_z(j); zero by construction
};
struct StepLawReport {
  std::vector<StepLawPoint> points;
  stats::LineFit tv_fit;  // log TV against z over points above the floating floor
  double sigma2 = 0.0;
};
StepLawReport step_law_checks(double beta, std::span<const long> z_grid);

struct StationaryLaw {
  double beta = 0.0;
  long half_width = 0;      // nu supported on [-half_width, half_width]
  std::vector<double> nu;   // nu[j + half_width]
  double sigma2 = 0.0;
  double leak = 0.0;        // Gaussian-tail mass outside the window (bound)
  double nu_at(long j) const;
  double rho_at(long x) const { return nu_at(x + 1); }
};
StationaryLaw stationary_data(double beta, long half_width = 0);
// ||rho P - rho||_TV on the eta window.
double stationarity_defect(const StationaryLaw& law, EtaWindow window);

struct RatioBound {
  double constant = 0.0;  // max of P^n(0,x+1) e^{beta x} / P^n(0,x)
  int arg_n = 0;
  long arg_x = 0;
  std::size_t pairs = 0;
};
RatioBound eta_ratio_bound(double beta, int n_max, EtaWindow window);

// TV(P^m(0,.), rho) for m = 0..m_max.
std::vector<double> eta_mixing_profile(double beta, int m_max, EtaWindow window);

// 1D TSAW on {0..n} from 0: 0 -> 1 and n -> n-1 deterministic.
struct PathRecord {
  std::vector<std::uint32_t> backward;  // backward[x-1] = B(x,n)
  std::vector<std::uint32_t> forward;   // forward[x-1]  = F(x,n)
  bool ruin = false;                    // tau_n < tau_0^+
};
struct PathMonteCarlo {
  std::vector<PathRecord> records;
  std::uint64_t discarded = 0;
};
PathMonteCarlo mc_path_tsaw(int n, double beta, std::uint64_t reps, std::uint64_t master_seed,
                            std::uint64_t step_cap = 100'000'000);

struct RuinFrequency {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  std::uint64_t discarded = 0;
  double p() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
  double se() const;
};
// Runs each replica only until min(tau_n, tau_0^+).
RuinFrequency mc_ruin_frequency(int n, double beta, std::uint64_t reps, std::uint64_t master_seed,
                                std::uint64_t step_cap = 100'000'000);

// Exact law of (Y_0, ..., Y_{len-1}) from Y_0 = 0, and of (Z_1, ..., Z_len) from
// Z_1 = 1, restricted to paths of probability above cutoff. The remainder is
// the mass of dropped paths.
struct PathLaw {
  std::map<std::vector<long>, double> prob;
  double remainder = 0.0;
};
PathLaw y_path_law(double beta, int len, double cutoff = 1e-14);
PathLaw z_path_law(double beta, int len, double cutoff = 1e-14);

}  // namespace tsaw::chains
