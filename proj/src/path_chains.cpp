#include "tsaw/path_chains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tsaw/error.hpp"
#include "tsaw/linalg.hpp"
#include "tsaw/rng.hpp"
#include "tsaw/simd/kernels.hpp"

namespace tsaw::chains {

namespace {

// Masses below this are booked as leak to keep subnormals out of the hot loops.
constexpr double kTiny = 1e-300;

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive", "beta");
}

}  // namespace

LocalParams::LocalParams(double beta) : beta_(beta) { require_beta(beta); }

double LocalParams::log_p(long u) const { return -softplus(beta_ * (2.0 * static_cast<double>(u) + 1.0)); }
double LocalParams::log_q(long u) const { return -softplus(-beta_ * (2.0 * static_cast<double>(u) + 1.0)); }
double LocalParams::p(long u) const { return std::exp(log_p(u)); }
double LocalParams::q(long u) const { return std::exp(log_q(u)); }

TruncatedDistribution::TruncatedDistribution(long lo, std::vector<double> mass, double leaked)
    : lo_(lo), mass_(std::move(mass)), leaked_(leaked) {
  for (double m : mass_)
    if (!(m >= 0.0)) throw ValidationError("masses must be non-negative", "distribution");
  if (!(leaked_ >= 0.0)) throw ValidationError("leaked mass must be non-negative", "distribution");
}

TruncatedDistribution TruncatedDistribution::point_mass(long at) { return TruncatedDistribution(at, {1.0}, 0.0); }

double TruncatedDistribution::at(long k) const {
  if (k < lo_ || k > hi()) return 0.0;
  return mass_[static_cast<std::size_t>(k - lo_)];
}

double TruncatedDistribution::total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

double TruncatedDistribution::sum_range(long a, long b) const {
  a = std::max(a, lo_);
  b = std::min(b, hi());
  double s = 0.0;
  for (long k = a; k <= b; ++k) s += mass_[static_cast<std::size_t>(k - lo_)];
  return s;
}

double TruncatedDistribution::moment(int order) const {
  double s = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i)
    s += mass_[i] * std::pow(static_cast<double>(lo_ + static_cast<long>(i)), order);
  return s;
}

EtaWindow default_eta_window(double beta) {
  require_beta(beta);
  const long w = static_cast<long>(std::ceil(std::sqrt(60.0 / beta))) + 2;
  return {-w - 1, w};
}

TruncatedDistribution eta_row(const LocalParams& lp, long u, EtaWindow window) {
  if (u < window.lo || u > window.hi) throw ValidationError("row index outside the eta window", "eta.u");
  const long first = std::max(window.lo, u - 1);
  std::vector<double> vals(static_cast<std::size_t>(window.hi - first + 1), 0.0);
  double leak = 0.0;
  if (u - 1 < window.lo) leak += lp.q(u);
  else vals[0] = lp.q(u);
  double logprod = 0.0;
  for (long v = u; v <= window.hi; ++v) {
    logprod += lp.log_p(v);
    vals[static_cast<std::size_t>(v - first)] = std::exp(logprod + lp.log_q(v + 1));
  }
  leak += std::exp(logprod);  // passes above the window
  return TruncatedDistribution(first, std::move(vals), leak);
}

namespace {

struct EtaMatrix {
  EtaWindow window;
  std::vector<TruncatedDistribution> rows;  // rows[u - lo]
};

EtaMatrix eta_matrix(double beta, EtaWindow window) {
  if (window.hi <= window.lo) throw ValidationError("empty eta window", "eta.window");
  LocalParams lp(beta);
  EtaMatrix m{window, {}};
  for (long u = window.lo; u <= window.hi; ++u) m.rows.push_back(eta_row(lp, u, window));
  return m;
}

// One application of the eta kernel to a law on the window.
void eta_apply(const EtaMatrix& k, std::span<const double> cur, std::vector<double>& next, double& leak) {
  std::fill(next.begin(), next.end(), 0.0);
  const long lo = k.window.lo;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const double m = cur[i];
    if (m == 0.0) continue;
    const auto& row = k.rows[i];
    leak += m * row.leaked();
    simd::axpy(m, row.masses(), std::span<double>(next).subspan(static_cast<std::size_t>(row.lo() - lo), row.size()));
  }
  for (double& x : next)
    if (x < kTiny && x > 0.0) {
      leak += x;
      x = 0.0;
    }
}

long required_half_width(double beta) { return static_cast<long>(std::ceil(std::sqrt(60.0 / beta))) + 2; }

}  // namespace

std::vector<TruncatedDistribution> eta_power_rows(double beta, int m_max, EtaWindow window, long start,
                                                  double row_leak_budget) {
  if (m_max < 0) throw ValidationError("m_max must be >= 0", "eta.m_max");
  if (start < window.lo || start > window.hi) throw ValidationError("start outside the eta window", "eta.start");
  const EtaMatrix k = eta_matrix(beta, window);
  const std::size_t n = static_cast<std::size_t>(window.hi - window.lo + 1);
  std::vector<double> cur(n, 0.0), next(n, 0.0);
  cur[static_cast<std::size_t>(start - window.lo)] = 1.0;
  double leak = 0.0;
  std::vector<TruncatedDistribution> out;
  out.reserve(static_cast<std::size_t>(m_max) + 1);
  out.emplace_back(window.lo, cur, 0.0);
  for (int m = 1; m <= m_max; ++m) {
    eta_apply(k, cur, next, leak);
    std::swap(cur, next);
    if (leak > row_leak_budget)
      throw LeakBudgetExceeded("eta window [" + std::to_string(window.lo) + "," + std::to_string(window.hi) +
                                   "] too narrow; use half-width >= " + std::to_string(required_half_width(beta)),
                               leak, row_leak_budget, required_half_width(beta));
    out.emplace_back(window.lo, cur, leak);
  }
  return out;
}

std::span<const double> BandedRows::row(long z) const {
  const auto i = static_cast<std::size_t>(z);
  return {data_.data() + offset_[i], offset_[i + 1] - offset_[i]};
}

double BandedRows::at(long z, long y) const {
  if (z < 0 || static_cast<std::size_t>(z) >= rows()) return 0.0;
  const long f = first(z);
  const auto r = row(z);
  if (y < f || y >= f + static_cast<long>(r.size())) return 0.0;
  return r[static_cast<std::size_t>(y - f)];
}

void BandedRows::append_row(long first, std::span<const double> values, double leak) {
  std::size_t b = 0, e = values.size();
  while (b < e && values[b] < kTiny) leak += values[b++];
  while (e > b && values[e - 1] < kTiny) leak += values[--e];
  first_.push_back(first + static_cast<long>(b));
  data_.insert(data_.end(), values.begin() + static_cast<std::ptrdiff_t>(b), values.begin() + static_cast<std::ptrdiff_t>(e));
  offset_.push_back(data_.size());
  leak_.push_back(leak);
}

namespace {

// Row z uses eta row m = z + shift started at `start`; column y = z + 1 + v.
BandedRows assemble_rows(double beta, long max_state, EtaWindow window, long start, long shift) {
  if (max_state < 0) throw ValidationError("max_state must be >= 0", "kernel");
  const auto eta = eta_power_rows(beta, static_cast<int>(max_state + shift), window, start);
  BandedRows k;
  for (long z = 0; z <= max_state; ++z) {
    const auto& row = eta[static_cast<std::size_t>(z + shift)];
    const long first_y = std::max(0L, z + 1 + row.lo());
    const long first_v = first_y - z - 1;
    const auto masses = row.masses();
    const auto skip = static_cast<std::size_t>(first_v - row.lo());
    // Entries with y < 0 are exact zeros: the eta chain moves down by at most one per step.
    k.append_row(first_y, masses.subspan(std::min(skip, masses.size())), row.leaked());
  }
  return k;
}

}  // namespace

BandedRows build_y_kernel(double beta, long max_state, EtaWindow window) {
  return assemble_rows(beta, max_state, window, 0, 1);
}

BandedRows build_z_kernel(double beta, long max_state, EtaWindow window) {
  return assemble_rows(beta, max_state, window, -1, 0);
}

long truncation_height(long n) {
  if (n < 0) throw ValidationError("n must be >= 0", "n");
  return static_cast<long>(std::ceil(8.0 * std::sqrt(static_cast<double>(n)))) + 64;
}

BandedChain::BandedChain(const BandedRows& kernel, long height, double leak_budget, std::string label)
    : kernel_(&kernel), height_(height), budget_(leak_budget), label_(std::move(label)) {
  if (height < 0) throw ValidationError("height must be >= 0", "height");
  if (!(leak_budget > 0.0)) throw ValidationError("leak budget must be positive", "leak_budget");
  if (kernel.rows() < static_cast<std::size_t>(height) + 1)
    throw ValidationError("kernel has fewer rows than the chain height", "height");
  mass_.assign(static_cast<std::size_t>(height) + 1, 0.0);
  next_ = mass_;
  above_.assign(mass_.size(), 0.0);
  for (long z = 0; z <= height; ++z) {
    const auto r = kernel.row(z);
    const long f = kernel.first(z);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (f + static_cast<long>(i) > height) s += r[i];
    above_[static_cast<std::size_t>(z)] = s;
  }
}

void BandedChain::set_point_mass(long at) {
  if (at < 0 || at > height_) throw ValidationError("start outside chain window", "start");
  std::fill(mass_.begin(), mass_.end(), 0.0);
  mass_[static_cast<std::size_t>(at)] = 1.0;
  active_lo_ = active_hi_ = at;
  leaked_ = absorbed_ = 0.0;
}

void BandedChain::step() {
  long new_lo = std::numeric_limits<long>::max(), new_hi = -1;
  for (long z = active_lo_; z <= active_hi_; ++z) {
    if (mass_[static_cast<std::size_t>(z)] == 0.0) continue;
    const long f = kernel_->first(z);
    const long l = std::min(height_, f + static_cast<long>(kernel_->row(z).size()) - 1);
    if (l < f) continue;
    new_lo = std::min(new_lo, f);
    new_hi = std::max(new_hi, l);
  }
  double leak = 0.0;
  for (long z = active_lo_; z <= active_hi_; ++z) {
    const double m = mass_[static_cast<std::size_t>(z)];
    if (m == 0.0) continue;
    leak += m * (kernel_->row_leak(z) + above_[static_cast<std::size_t>(z)]);
    const long f = kernel_->first(z);
    const auto r = kernel_->row(z);
    const long l = std::min(height_, f + static_cast<long>(r.size()) - 1);
    if (l < f) continue;
    simd::active().axpy(m, r.data(), next_.data() + f, static_cast<std::size_t>(l - f + 1));
  }
  if (new_hi < 0) {
    new_lo = 0;
    new_hi = -1;
  }
  for (long k = new_lo; k <= new_hi; ++k) {
    double& x = next_[static_cast<std::size_t>(k)];
    if (x > 0.0 && x < kTiny) {
      leak += x;
      x = 0.0;
    }
  }
  std::fill(mass_.begin() + active_lo_, mass_.begin() + active_hi_ + 1, 0.0);
  std::swap(mass_, next_);
  active_lo_ = new_lo;
  active_hi_ = new_hi;
  leaked_ += leak;
  if (leaked_ > budget_)
    throw LeakBudgetExceeded(label_ + ": leaked mass " + std::to_string(leaked_) + " exceeds budget at height " +
                                 std::to_string(height_),
                             leaked_, budget_);
}

double BandedChain::absorb(long s) {
  if (s < 0 || s > height_) return 0.0;
  double& x = mass_[static_cast<std::size_t>(s)];
  const double m = x;
  absorbed_ += m;
  x = 0.0;
  return m;
}

double BandedChain::total() const {
  if (active_hi_ < active_lo_) return 0.0;
  return simd::sum(std::span<const double>(mass_).subspan(static_cast<std::size_t>(active_lo_),
                                                          static_cast<std::size_t>(active_hi_ - active_lo_ + 1)));
}

double BandedChain::sum_range(long a, long b) const {
  a = std::max(a, active_lo_);
  b = std::min(b, active_hi_);
  double s = 0.0;
  for (long k = a; k <= b; ++k) s += mass_[static_cast<std::size_t>(k)];
  return s;
}

TruncatedDistribution BandedChain::snapshot() const {
  if (active_hi_ < active_lo_) return TruncatedDistribution(0, {}, leaked_);
  return TruncatedDistribution(active_lo_,
                               std::vector<double>(mass_.begin() + active_lo_, mass_.begin() + active_hi_ + 1), leaked_);
}

namespace {

long height_for(const ChainOptions& opt, long steps) {
  if (opt.height > 0) return opt.height;
  return truncation_height(steps);
}

}  // namespace

RuinSeries ruin_series(int n_max, const ChainOptions& opt) {
  if (n_max < 1) throw ValidationError("n must be >= 1", "n");
  RuinSeries out;
  out.height = height_for(opt, n_max);
  const auto kernel = build_y_kernel(opt.beta, out.height, default_eta_window(opt.beta));
  BandedChain chain(kernel, out.height, opt.leak_budget, "Y evolution");
  chain.set_point_mass(0);
  out.r.assign(static_cast<std::size_t>(n_max) + 1, std::numeric_limits<double>::quiet_NaN());
  out.leak.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  out.r[1] = 1.0;
  for (int n = 2; n <= n_max; ++n) {
    chain.step();
    out.r[static_cast<std::size_t>(n)] = chain.at(0);
    out.leak[static_cast<std::size_t>(n)] = chain.leaked();
  }
  return out;
}

TruncatedDistribution y_evolve(int n, const ChainOptions& opt) {
  if (n < 1) throw ValidationError("n must be >= 1", "n");
  const int k = n - 1;
  return y_laws(std::span<const int>(&k, 1), opt).front();
}

std::vector<TruncatedDistribution> y_laws(std::span<const int> ks, const ChainOptions& opt) {
  if (ks.empty()) return {};
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 0) throw ValidationError("step counts must be >= 0", "k");
    if (i > 0 && ks[i] < ks[i - 1]) throw ValidationError("step counts must be sorted", "k");
  }
  const long height = height_for(opt, ks.back() + 1);
  const auto kernel = build_y_kernel(opt.beta, height, default_eta_window(opt.beta));
  BandedChain chain(kernel, height, opt.leak_budget, "Y evolution");
  chain.set_point_mass(0);
  std::vector<TruncatedDistribution> out;
  int done = 0;
  for (int k : ks) {
    while (done < k) {
      chain.step();
      ++done;
    }
    out.push_back(chain.snapshot());
  }
  return out;
}

TruncatedDistribution z_evolve(int n, const ChainOptions& opt) {
  if (n < 1) throw ValidationError("n must be >= 1", "n");
  const long height = height_for(opt, n);
  const auto kernel = build_z_kernel(opt.beta, height, default_eta_window(opt.beta));
  BandedChain chain(kernel, height, opt.leak_budget, "Z evolution");
  chain.set_point_mass(1);
  for (int k = 1; k < n; ++k) chain.step();
  return chain.snapshot();
}

ZSeries z_series(int n_max, const ChainOptions& opt) {
  if (n_max < 1) throw ValidationError("n must be >= 1", "n");
  ZSeries out;
  out.height = height_for(opt, n_max);
  const auto kernel = build_z_kernel(opt.beta, out.height, default_eta_window(opt.beta));
  BandedChain chain(kernel, out.height, opt.leak_budget, "Z evolution");
  chain.set_point_mass(1);
  const auto sz = static_cast<std::size_t>(n_max) + 1;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.survive.assign(sz, nan);
  out.mean.assign(sz, nan);
  out.second.assign(sz, nan);
  out.leak.assign(sz, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) chain.step();
    const auto law = chain.snapshot();
    const auto i = static_cast<std::size_t>(n);
    out.survive[i] = law.sum_range(1, law.hi());
    out.mean[i] = law.moment(1);
    out.second[i] = law.moment(2);
    out.leak[i] = chain.leaked();
  }
  return out;
}

double gen_ruin(int n, int j, const ChainOptions& opt) {
  if (j < 1) throw ValidationError("j must be >= 1", "j");
  return y_evolve(n, opt).sum_range(0, j - 1);
}

KilledSeries killed_series(int m_max, std::span<const int> keep_laws, const ChainOptions& opt) {
  if (m_max < 0) throw ValidationError("m must be >= 0", "m");
  KilledSeries out;
  out.height = height_for(opt, std::max(m_max, 1));
  const auto kernel = build_y_kernel(opt.beta, out.height, default_eta_window(opt.beta));
  BandedChain chain(kernel, out.height, opt.leak_budget, "killed Y evolution");
  chain.set_point_mass(0);
  out.survival.assign(static_cast<std::size_t>(m_max) + 1, 1.0);
  out.leak.assign(static_cast<std::size_t>(m_max) + 1, 0.0);
  auto keep = [&](int m) { return std::find(keep_laws.begin(), keep_laws.end(), m) != keep_laws.end(); };
  for (int m = 1; m <= m_max; ++m) {
    chain.step();
    chain.absorb(0);
    out.survival[static_cast<std::size_t>(m)] = chain.total();
    out.leak[static_cast<std::size_t>(m)] = chain.leaked();
    if (keep(m)) out.laws.emplace(m, chain.snapshot());
  }
  return out;
}

double survival(int m, const ChainOptions& opt) { return killed_series(m, {}, opt).survival.back(); }

double killed_interval_mass(int n, int j, const ChainOptions& opt) {
  if (n < 1) throw ValidationError("n must be >= 1", "n");
  if (j < 1 || static_cast<double>(j) > std::sqrt(static_cast<double>(n) + 1.0))
    throw ValidationError("j must satisfy 1 <= j <= sqrt(n+1)", "j");
  const int keep[] = {n};
  const auto ks = killed_series(n, keep, opt);
  return ks.laws.at(n).sum_range(1, j - 1);
}

HarmonicProfile harmonic_profile(int N, double beta) {
  if (N < 2) throw ValidationError("N must be >= 2", "N");
  const auto kernel = build_y_kernel(beta, N - 1, default_eta_window(beta));
  const std::size_t m = static_cast<std::size_t>(N - 1);
  linalg::Matrix a(m, m, 0.0);
  std::vector<double> b(m, 0.0);
  HarmonicProfile out;
  out.N = N;
  for (long x = 1; x < N; ++x) {
    const auto i = static_cast<std::size_t>(x - 1);
    a(i, i) = 1.0;
    const long f = kernel.first(x);
    const auto r = kernel.row(x);
    out.kernel_leak = std::max(out.kernel_leak, kernel.row_leak(x));
    for (std::size_t t = 0; t < r.size(); ++t) {
      const long y = f + static_cast<long>(t);
      if (y >= N) b[i] += r[t];
      else if (y > 0) a(i, static_cast<std::size_t>(y - 1)) -= r[t];
    }
  }
  const linalg::Matrix a_copy = a;
  linalg::DenseLU lu(std::move(a));
  const auto phi = lu.solve(b);
  out.residual = linalg::residual_inf(a_copy, phi, b);
  out.pivot_ratio = lu.pivots().pivot_ratio();
  if (!(out.residual < 1e-10)) throw NumericBudgetError("harmonic profile solve residual too large");
  out.h.assign(static_cast<std::size_t>(N), 0.0);
  for (long x = 1; x < N; ++x) out.h[static_cast<std::size_t>(x)] = N * phi[static_cast<std::size_t>(x - 1)];
  for (long x = 0; x < N; ++x)
    out.max_abs_deviation = std::max(out.max_abs_deviation, std::fabs(out.h[static_cast<std::size_t>(x)] - x));
  return out;
}

double StationaryLaw::nu_at(long j) const {
  if (j < -half_width || j > half_width) return 0.0;
  return nu[static_cast<std::size_t>(j + half_width)];
}

StationaryLaw stationary_data(double beta, long half_width) {
  require_beta(beta);
  StationaryLaw law;
  law.beta = beta;
  law.half_width = half_width > 0 ? half_width : default_eta_window(beta).hi;
  const long J = law.half_width;
  std::vector<double> w(static_cast<std::size_t>(2 * J + 1));
  for (long j = -J; j <= J; ++j) w[static_cast<std::size_t>(j + J)] = std::exp(-beta * static_cast<double>(j * j));
  // Sum small terms first.
  double z = 0.0;
  for (long j = J; j >= 1; --j) z += 2.0 * w[static_cast<std::size_t>(j + J)];
  z += 1.0;
  const double jn = static_cast<double>(J + 1);
  const double tail = 2.0 * std::exp(-beta * jn * jn) / (1.0 - std::exp(-beta * (2.0 * jn + 1.0)));
  law.leak = tail / (z + tail);
  if (law.leak > 1e-15)
    throw LeakBudgetExceeded("stationary window too narrow; use half-width >= " + std::to_string(required_half_width(beta)),
                             law.leak, 1e-15, required_half_width(beta));
  law.nu.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) law.nu[i] = w[i] / (z + tail);
  for (long j = J; j >= 1; --j) law.sigma2 += 2.0 * static_cast<double>(j * j) * law.nu[static_cast<std::size_t>(j + J)];
  return law;
}

double stationarity_defect(const StationaryLaw& law, EtaWindow window) {
  const EtaMatrix k = eta_matrix(law.beta, window);
  const std::size_t n = static_cast<std::size_t>(window.hi - window.lo + 1);
  std::vector<double> rho(n), out(n);
  double outside = 0.0;
  for (long x = window.lo; x <= window.hi; ++x) rho[static_cast<std::size_t>(x - window.lo)] = law.rho_at(x);
  for (long x = -law.half_width - 1; x < window.lo; ++x) outside += law.rho_at(x);
  for (long x = window.hi + 1; x <= law.half_width - 1; ++x) outside += law.rho_at(x);
  double leak = 0.0;
  eta_apply(k, rho, out, leak);
  return 0.5 * (simd::abs_diff_sum(out, rho) + leak + outside + law.leak);
}

RatioBound eta_ratio_bound(double beta, int n_max, EtaWindow window) {
  const auto rows = eta_power_rows(beta, n_max, window, 0);
  RatioBound rb;
  for (int n = 0; n <= n_max; ++n) {
    const auto& row = rows[static_cast<std::size_t>(n)];
    for (long x = 0; x < window.hi; ++x) {
      const double px = row.at(x);
      if (px < 1e-250) continue;
      const double ratio = row.at(x + 1) * std::exp(beta * static_cast<double>(x)) / px;
      ++rb.pairs;
      if (ratio > rb.constant) {
        rb.constant = ratio;
        rb.arg_n = n;
        rb.arg_x = x;
      }
    }
  }
  return rb;
}

std::vector<double> eta_mixing_profile(double beta, int m_max, EtaWindow window) {
  const auto law = stationary_data(beta);
  const auto rows = eta_power_rows(beta, m_max, window, 0);
  std::vector<double> tv;
  std::vector<double> rho(static_cast<std::size_t>(window.hi - window.lo + 1));
  for (long x = window.lo; x <= window.hi; ++x) rho[static_cast<std::size_t>(x - window.lo)] = law.rho_at(x);
  for (const auto& r : rows) tv.push_back(0.5 * (simd::abs_diff_sum(r.masses(), rho) + r.leaked()));
  return tv;
}

StepLawReport step_law_checks(double beta, std::span<const long> z_grid) {
  if (z_grid.empty()) throw ValidationError("z grid is empty", "z_grid");
  long zmax = 0;
  for (long z : z_grid) {
    if (z < 0) throw ValidationError("states must be >= 0", "z_grid");
    zmax = std::max(zmax, z);
  }
  const EtaWindow window = default_eta_window(beta);
  const auto rows = eta_power_rows(beta, static_cast<int>(zmax + 1), window, 0);
  const auto nu = stationary_data(beta);
  StepLawReport rep;
  rep.sigma2 = nu.sigma2;
  std::vector<double> fz, ftv;
  for (long z : z_grid) {
    const auto& row = rows[static_cast<std::size_t>(z + 1)];
    StepLawPoint pt;
    pt.z = z;
    // mu_z(j) = P^{z+1}(0, j-1)
    const long jlo = std::min(row.lo() + 1, -nu.half_width), jhi = std::max(row.hi() + 1, nu.half_width);
    const long span = std::max(std::abs(jlo), std::abs(jhi));
    pt.tail.assign(static_cast<std::size_t>(span) + 2, 0.0);
    for (long j = jlo; j <= jhi; ++j) {
      const double mu = row.at(j - 1);
      if (j < -z) pt.lowest_jump_mass += mu;
      pt.tv_to_nu += std::fabs(mu - nu.nu_at(j));
      pt.m1 += static_cast<double>(j) * mu;
      pt.m2 += static_cast<double>(j * j) * mu;
      for (long m = 0; m <= std::abs(j); ++m) pt.tail[static_cast<std::size_t>(m)] += mu;
    }
    pt.tv_to_nu += row.leaked();
    std::vector<double> mx, my;
    for (std::size_t m = 1; m < pt.tail.size(); ++m)
      if (pt.tail[m] > 1e-14) {
        mx.push_back(static_cast<double>(m));
        my.push_back(pt.tail[m]);
      }
    if (mx.size() >= 2) pt.tail_slope = stats::fit_loglinear(mx, my).slope;
    if (pt.tv_to_nu > 1e-12) {
      fz.push_back(static_cast<double>(z));
      ftv.push_back(pt.tv_to_nu);
    }
    rep.points.push_back(std::move(pt));
  }
  if (fz.size() >= 2) rep.tv_fit = stats::fit_loglinear(fz, ftv);
  return rep;
}

namespace {

class PathWalk {
 public:
  PathWalk(int n, double beta) : n_(n), local_(static_cast<std::size_t>(n) + 2, 0) {
    const double limit = std::ceil(746.0 / beta) + 1.0;
    expo_.resize(static_cast<std::size_t>(std::min(limit, 1.0e7)));
    for (std::size_t d = 0; d < expo_.size(); ++d) expo_[d] = std::exp(-beta * static_cast<double>(d));
  }
  void reset() {
    std::fill(local_.begin(), local_.end(), 0);
    x_ = 0;
  }
  int position() const { return x_; }
  // Returns the new position. local_[x] is the crossing count of edge {x-1, x}.
  int step(Rng& rng) {
    int next;
    if (x_ == 0) next = 1;
    else if (x_ == n_) next = n_ - 1;
    else {
      const std::uint64_t left = local_[static_cast<std::size_t>(x_)];
      const std::uint64_t right = local_[static_cast<std::size_t>(x_) + 1];
      double p_left;
      if (left >= right) {
        const double e = rel(left - right);
        p_left = e / (1.0 + e);
      } else {
        p_left = 1.0 / (1.0 + rel(right - left));
      }
      next = rng.uniform() < p_left ? x_ - 1 : x_ + 1;
    }
    ++local_[static_cast<std::size_t>(std::max(x_, next))];
    x_ = next;
    return next;
  }

 private:
  double rel(std::uint64_t d) const { return d < expo_.size() ? expo_[d] : 0.0; }
  int n_;
  int x_ = 0;
  std::vector<std::uint64_t> local_;
  std::vector<double> expo_;
};

}  // namespace

PathMonteCarlo mc_path_tsaw(int n, double beta, std::uint64_t reps, std::uint64_t master_seed,
                            std::uint64_t step_cap) {
  if (n < 1) throw ValidationError("n must be >= 1", "n");
  require_beta(beta);
  PathMonteCarlo out;
  PathWalk walk(n, beta);
  for (std::uint64_t i = 0; i < reps; ++i) {
    Rng rng(derive_replica_seed(master_seed, i));
    walk.reset();
    PathRecord rec;
    rec.backward.assign(static_cast<std::size_t>(n), 0);
    rec.forward.assign(static_cast<std::size_t>(n), 0);
    bool hit_n = false, back_to_0 = false;
    std::uint64_t steps = 0;
    while (!(hit_n && back_to_0) && steps < step_cap) {
      const int from = walk.position();
      const int to = walk.step(rng);
      ++steps;
      if (!hit_n && to == from - 1) ++rec.backward[static_cast<std::size_t>(from) - 1];
      if (!back_to_0 && to == from + 1) ++rec.forward[static_cast<std::size_t>(to) - 1];
      if (to == n && !hit_n) {
        hit_n = true;
        if (!back_to_0) rec.ruin = true;
      }
      if (to == 0) back_to_0 = true;
    }
    if (!(hit_n && back_to_0)) {
      ++out.discarded;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

double RuinFrequency::se() const { return stats::binomial_se(p(), static_cast<double>(trials)); }

RuinFrequency mc_ruin_frequency(int n, double beta, std::uint64_t reps, std::uint64_t master_seed,
                                std::uint64_t step_cap) {
  if (n < 1) throw ValidationError("n must be >= 1", "n");
  require_beta(beta);
  RuinFrequency out;
  PathWalk walk(n, beta);
  for (std::uint64_t i = 0; i < reps; ++i) {
    Rng rng(derive_replica_seed(master_seed, i));
    walk.reset();
    std::uint64_t steps = 0;
    int outcome = -1;
    while (steps < step_cap) {
      const int to = walk.step(rng);
      ++steps;
      if (to == n) {
        outcome = 1;
        break;
      }
      if (to == 0) {
        outcome = 0;
        break;
      }
    }
    if (outcome < 0) {
      ++out.discarded;
      continue;
    }
    ++out.trials;
    if (outcome == 1) ++out.hits;
  }
  return out;
}

namespace {

PathLaw enumerate_paths(const BandedRows& kernel, long start, int len, double cutoff) {
  PathLaw law;
  std::vector<std::pair<std::vector<long>, double>> frontier{{{start}, 1.0}};
  for (int step = 1; step < len; ++step) {
    std::vector<std::pair<std::vector<long>, double>> next;
    for (const auto& [path, p] : frontier) {
      const long z = path.back();
      if (static_cast<std::size_t>(z) >= kernel.rows()) {
        law.remainder += p;
        continue;
      }
      const long f = kernel.first(z);
      const auto r = kernel.row(z);
      double kept = 0.0;
      for (std::size_t t = 0; t < r.size(); ++t) {
        const double q = p * r[t];
        if (q < cutoff) continue;
        auto np = path;
        np.push_back(f + static_cast<long>(t));
        next.emplace_back(std::move(np), q);
        kept += q;
      }
      law.remainder += p - kept;
    }
    frontier = std::move(next);
  }
  for (auto& [path, p] : frontier) law.prob[path] += p;
  return law;
}

}  // namespace

PathLaw y_path_law(double beta, int len, double cutoff) {
  if (len < 1) throw ValidationError("length must be >= 1", "len");
  return enumerate_paths(build_y_kernel(beta, 64, default_eta_window(beta)), 0, len, cutoff);
}

PathLaw z_path_law(double beta, int len, double cutoff) {
  if (len < 1) throw ValidationError("length must be >= 1", "len");
  return enumerate_paths(build_z_kernel(beta, 64, default_eta_window(beta)), 1, len, cutoff);
}

}  // namespace tsaw::chains
