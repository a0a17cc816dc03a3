#include "tsaw/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tsaw/error.hpp"
#include "tsaw/simd/kernels.hpp"

namespace tsaw::renewal {

using chains::BandedRows;

double LadderData::H_at(long u) const {
  if (u <= 0) return 0.0;
  const long top = static_cast<long>(H.size()) - 1;
  if (u <= top) return H[static_cast<std::size_t>(u)];
  return H.back() + static_cast<double>(u - top) / mean;
}

LadderData ladder_law(double beta, const LadderOptions& opt) {
  if (opt.max_iterations < 1) throw ValidationError("iteration cap must be >= 1", "ladder.max_iterations");
  if (!(opt.tail_eps > 0.0)) throw ValidationError("tail_eps must be positive", "ladder.tail_eps");
  if (opt.u_max < 1) throw ValidationError("u_max must be >= 1", "ladder.u_max");
  const auto law = chains::stationary_data(beta);
  const long J = law.half_width;
  const long depth = chains::truncation_height(opt.max_iterations);
  // alive[i] = mass at position -i, i = 0..depth
  std::vector<double> alive(static_cast<std::size_t>(depth) + 1, 0.0), next(alive.size(), 0.0);
  alive[0] = 1.0;
  LadderData out;
  out.beta = beta;
  std::vector<double> chi(static_cast<std::size_t>(J) + 1, 0.0);
  double lost = 0.0;
  double alive_mass = 1.0;
  long active = 0;  // deepest index holding mass
  int it = 0;
  while (it < opt.max_iterations && alive_mass >= opt.tail_eps) {
    std::fill(next.begin(), next.begin() + std::min<long>(active + J, depth) + 1, 0.0);
    for (long i = 0; i <= active; ++i) {
      const double m = alive[static_cast<std::size_t>(i)];
      if (m == 0.0) continue;
      // from position -i, increment j lands at j - i
      for (long j = -J; j <= J; ++j) {
        const double p = m * law.nu_at(j);
        const long pos = j - i;
        if (pos > 0) chi[static_cast<std::size_t>(pos)] += p;
        else if (-pos > depth) lost += p;
        else next[static_cast<std::size_t>(-pos)] += p;
      }
    }
    active = std::min(active + J, depth);
    std::swap(alive, next);
    alive_mass = simd::sum(std::span<const double>(alive).first(static_cast<std::size_t>(active) + 1));
    ++it;
  }
  out.iterations = it;
  out.raw_residual = alive_mass + lost + law.leak;
  std::vector<double> direct = chi;
  if (opt.excess_correction && out.raw_residual > 0.0) {
    // Mass still below zero overshoots with the stationary excess law P(chi >= k)/E[chi].
    for (int pass = 0; pass < 200; ++pass) {
      double total = 0.0, mean = 0.0;
      for (std::size_t k = 1; k < chi.size(); ++k) {
        total += chi[k];
        mean += static_cast<double>(k) * chi[k];
      }
      mean /= total;
      std::vector<double> upd = direct;
      double tail = total;
      for (std::size_t k = 1; k < chi.size(); ++k) {
        upd[k] += out.raw_residual * (tail / total) / mean;
        tail -= chi[k];
      }
      double change = 0.0;
      for (std::size_t k = 1; k < chi.size(); ++k) change = std::max(change, std::fabs(upd[k] - chi[k]));
      chi = std::move(upd);
      if (change < 1e-16) break;
    }
  }
  double total = 0.0;
  for (std::size_t k = 1; k < chi.size(); ++k) {
    total += chi[k];
    out.mean += static_cast<double>(k) * chi[k];
  }
  out.unassigned = std::max(0.0, 1.0 - total);
  if (out.unassigned > opt.tail_eps)
    throw NumericBudgetError("ladder law: unassigned mass " + std::to_string(out.unassigned) +
                             " above tail_eps after " + std::to_string(it) + " iterations");
  out.mean /= total;
  out.chi = chi;
  out.renewal_mass.assign(static_cast<std::size_t>(opt.u_max) + 1, 0.0);
  out.renewal_mass[0] = 1.0;
  for (long m = 1; m <= opt.u_max; ++m) {
    double s = 0.0;
    for (long k = 1; k <= std::min(m, J); ++k) s += chi[static_cast<std::size_t>(k)] * out.renewal_mass[static_cast<std::size_t>(m - k)];
    out.renewal_mass[static_cast<std::size_t>(m)] = s;
  }
  out.H.assign(static_cast<std::size_t>(opt.u_max) + 1, 0.0);
  for (long u = 1; u <= opt.u_max; ++u)
    out.H[static_cast<std::size_t>(u)] = out.H[static_cast<std::size_t>(u - 1)] + out.renewal_mass[static_cast<std::size_t>(u - 1)];
  return out;
}

const char* to_string(WalkKind k) { return k == WalkKind::S ? "S" : "Y"; }

BandedRows build_s_kernel(double beta, long max_state) {
  const auto law = chains::stationary_data(beta);
  BandedRows rows;
  for (long r = 0; r <= max_state; ++r) rows.append_row(r - law.half_width, law.nu, law.leak);
  return rows;
}

namespace {

// One step of a banded kernel killed outside [lo, hi]; returns mass leaving above hi or lost in rows.
double killed_step(const BandedRows& k, long lo, long hi, std::span<const double> cur, std::vector<double>& next) {
  std::fill(next.begin(), next.end(), 0.0);
  double leak = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const double m = cur[i];
    if (m == 0.0) continue;
    const long x = lo + static_cast<long>(i);
    const long f = k.first(x);
    const auto r = k.row(x);
    leak += m * k.row_leak(x);
    const long a = std::max(f, lo);
    const long b = std::min(f + static_cast<long>(r.size()) - 1, hi);
    for (long y = b + 1; y < f + static_cast<long>(r.size()); ++y) leak += m * r[static_cast<std::size_t>(y - f)];
    if (b < a) continue;
    simd::active().axpy(m, r.data() + (a - f), next.data() + (a - lo), static_cast<std::size_t>(b - a + 1));
  }
  return leak;
}

}  // namespace

double ExcursionKernels::p(int n, long x, long y) const {
  const auto it = std::find(starts.begin(), starts.end(), x);
  if (it == starts.end()) throw ValidationError("start state not tabulated", "excursion.x");
  if (n < 0 || n > n_max) throw ValidationError("n outside table", "excursion.n");
  if (y <= K || y > window_top) return 0.0;
  return table[static_cast<std::size_t>(it - starts.begin())][static_cast<std::size_t>(n)][static_cast<std::size_t>(y - K - 1)];
}

stats::LineFit ExcursionKernels::diagonal_decay(long x, int n_lo, int n_hi) const {
  std::vector<double> ns, vs;
  for (int n = n_lo; n <= n_hi; n *= 2) {
    ns.push_back(n);
    vs.push_back(p(n, x, x));
  }
  return stats::fit_loglog(ns, vs);
}

ExcursionKernels excursion_kernel(WalkKind kind, double beta, long K, int n_max, std::vector<long> starts,
                                  double leak_budget) {
  if (K < 0) throw ValidationError("K must be >= 0", "K");
  if (n_max < 1) throw ValidationError("n_max must be >= 1", "n_max");
  if (starts.empty()) starts.push_back(K + 1);
  ExcursionKernels out;
  out.kind = kind;
  out.K = K;
  out.n_max = n_max;
  out.window_top = K + chains::truncation_height(n_max);
  for (long x : starts)
    if (x <= K || x > out.window_top) throw ValidationError("start must lie in E_K", "excursion.starts");
  out.starts = std::move(starts);
  const BandedRows k = kind == WalkKind::S ? build_s_kernel(beta, out.window_top)
                                           : chains::build_y_kernel(beta, out.window_top, chains::default_eta_window(beta));
  const std::size_t w = static_cast<std::size_t>(out.window_top - K);
  for (long x : out.starts) {
    std::vector<std::vector<double>> tab;
    std::vector<double> cur(w, 0.0), next(w, 0.0);
    cur[static_cast<std::size_t>(x - K - 1)] = 1.0;
    tab.push_back(cur);
    double leak = 0.0;
    for (int n = 1; n <= n_max; ++n) {
      leak += killed_step(k, K + 1, out.window_top, cur, next);
      std::swap(cur, next);
      tab.push_back(cur);
    }
    if (leak > leak_budget)
      throw LeakBudgetExceeded("excursion kernel leaked above budget", leak, leak_budget);
    out.leak.push_back(leak);
    out.table.push_back(std::move(tab));
  }
  return out;
}

KernelGapReport killed_kernel_gap(double beta, long K, std::span<const long> xs, const LadderData& ladder) {
  if (xs.empty()) throw ValidationError("x grid is empty", "gap.x");
  long xmax = 0;
  for (long x : xs) {
    if (x <= K) throw ValidationError("x grid must lie in E_K", "gap.x");
    xmax = std::max(xmax, x);
  }
  const auto q = chains::build_y_kernel(beta, xmax, chains::default_eta_window(beta));
  const auto law = chains::stationary_data(beta);
  KernelGapReport rep;
  rep.K = K;
  std::vector<double> fx, fv;
  for (long x : xs) {
    const long f = q.first(x);
    const long last = std::max(f + static_cast<long>(q.row(x).size()) - 1, x + law.half_width);
    double s = 0.0;
    for (long y = std::max(K + 1, std::min(f, x - law.half_width)); y <= last; ++y)
      s += std::fabs(q.at(x, y) - law.nu_at(y - x)) * ladder.H_K(y + 1, K);
    const double v = s / ladder.H_K(x, K);
    rep.x.push_back(x);
    rep.value.push_back(v);
    if (v > 1e-14) {
      fx.push_back(static_cast<double>(x));
      fv.push_back(v);
    }
  }
  if (fx.size() >= 2) rep.fit = stats::fit_loglinear(fx, fv);
  return rep;
}

namespace {

// P^{(L)}(u, v) from the hitting distribution of W_K on the window [K+1, K+L].
linalg::Matrix solve_first_return(const BandedRows& q, long K, long L, double& residual) {
  const std::size_t S = static_cast<std::size_t>(K) + 1;
  const long lo = K + 1, hi = K + L;
  std::size_t kl = 0, ku = 0;
  for (long x = lo; x <= hi; ++x) {
    const long f = q.first(x);
    const long last = f + static_cast<long>(q.row(x).size()) - 1;
    if (std::max(f, lo) < x) kl = std::max(kl, static_cast<std::size_t>(x - std::max(f, lo)));
    if (std::min(last, hi) > x) ku = std::max(ku, static_cast<std::size_t>(std::min(last, hi) - x));
  }
  const auto n = static_cast<std::size_t>(L);
  linalg::BandedMatrix a(n, kl, ku);
  std::vector<std::vector<double>> rhs(S, std::vector<double>(n, 0.0));
  for (long x = lo; x <= hi; ++x) {
    const auto i = static_cast<std::size_t>(x - lo);
    a.at(i, i) = 1.0;
    const long f = q.first(x);
    const auto r = q.row(x);
    for (std::size_t t = 0; t < r.size(); ++t) {
      const long y = f + static_cast<long>(t);
      if (y <= K) rhs[static_cast<std::size_t>(y)][i] += r[t];
      else if (y <= hi) a.at(i, static_cast<std::size_t>(y - lo)) -= r[t];
    }
  }
  const linalg::BandedMatrix a_copy = a;
  linalg::BandedLU lu(std::move(a));
  linalg::Matrix P(S, S, 0.0);
  residual = 0.0;
  for (std::size_t v = 0; v < S; ++v) {
    std::vector<double> g = rhs[v];
    lu.solve_in_place(g);
    const auto ag = a_copy.multiply(g);
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::fabs(ag[i] - rhs[v][i]));
    for (std::size_t u = 0; u < S; ++u) {
      const long f = q.first(static_cast<long>(u));
      const auto r = q.row(static_cast<long>(u));
      double s = 0.0;
      for (std::size_t t = 0; t < r.size(); ++t) {
        const long x = f + static_cast<long>(t);
        if (x == static_cast<long>(v)) s += r[t];
        else if (x >= lo && x <= hi) s += r[t] * g[static_cast<std::size_t>(x - lo)];
      }
      P(u, v) = s;
    }
  }
  return P;
}

// sum_{n > N} n^{-p} s^n
double power_tail(int N, double p, double s) {
  if (s >= 1.0) return std::pow(static_cast<double>(N) + 0.5, 1.0 - p) / (p - 1.0);
  double total = 0.0;
  double sn = std::pow(s, N + 1);
  for (long n = N + 1;; ++n) {
    const double term = sn * std::pow(static_cast<double>(n), -p);
    total += term;
    if (term < 1e-22 * total) break;
    sn *= s;
  }
  return total;
}

}  // namespace

FirstReturnData first_return_matrix(long K, double beta, const FirstReturnOptions& opt) {
  if (K < 0) throw ValidationError("K must be >= 0", "K");
  if (opt.n_max < 16) throw ValidationError("n_max must be >= 16", "n_max");
  if (opt.solve_height < 16) throw ValidationError("solve_height must be >= 16", "solve_height");
  FirstReturnData out;
  out.K = K;
  out.n_max = opt.n_max;
  out.states = static_cast<std::size_t>(K) + 1;
  const std::size_t S = out.states;
  const long series_top = K + chains::truncation_height(opt.n_max);
  const long top = std::max(series_top, K + 2 * opt.solve_height);
  const BandedRows q = chains::build_y_kernel(beta, top, chains::default_eta_window(beta));

  // Route (a): first-return kernel by killed evolution from each u in W_K.
  out.kernel.assign((static_cast<std::size_t>(opt.n_max) + 1) * S * S, 0.0);
  for (std::size_t u = 0; u < S; ++u) {
    chains::BandedChain chain(q, series_top, opt.leak_budget, "first-return series");
    chain.set_point_mass(static_cast<long>(u));
    for (int n = 1; n <= opt.n_max; ++n) {
      chain.step();
      for (std::size_t v = 0; v < S; ++v)
        out.kernel[(static_cast<std::size_t>(n) * S + u) * S + v] = chain.absorb(static_cast<long>(v));
    }
  }
  out.tail_amplitude = linalg::Matrix(S, S);
  out.tail_mass = linalg::Matrix(S, S);
  out.P_series = linalg::Matrix(S, S);
  const int n_lo = opt.n_max / 4;
  const double zeta32 = power_tail(opt.n_max, 1.5, 1.0), zeta2 = power_tail(opt.n_max, 2.0, 1.0);
  for (std::size_t u = 0; u < S; ++u)
    for (std::size_t v = 0; v < S; ++v) {
      std::vector<double> xs, ys;
      double partial = 0.0;
      for (int n = 1; n <= opt.n_max; ++n) {
        const double kv = out.k(n, static_cast<long>(u), static_cast<long>(v));
        partial += kv;
        if (n >= n_lo) {
          xs.push_back(1.0 / std::sqrt(static_cast<double>(n)));
          ys.push_back(kv * std::pow(static_cast<double>(n), 1.5));
        }
      }
      // kernel(n) n^{3/2} = A + B n^{-1/2}
      const auto fit = stats::fit_line(xs, ys);
      out.tail_amplitude(u, v) = fit.intercept;
      out.tail_mass(u, v) = fit.intercept * zeta32 + fit.slope * zeta2;
      out.P_series(u, v) = partial + out.tail_mass(u, v);
      out.series_tail_bound = std::max(out.series_tail_bound, out.tail_mass(u, v));
    }

  // Route (b): hitting distributions on two window heights, extrapolated in 1/L.
  double r1 = 0.0, r2 = 0.0;
  const auto p1 = solve_first_return(q, K, opt.solve_height, r1);
  out.P_window = solve_first_return(q, K, 2 * opt.solve_height, r2);
  out.solve_residual = std::max(r1, r2);
  if (!(out.solve_residual < 1e-10)) throw NumericBudgetError("first-return linear solve residual above 1e-10");
  out.P = linalg::Matrix(S, S);
  for (std::size_t u = 0; u < S; ++u) {
    double row = 0.0;
    for (std::size_t v = 0; v < S; ++v) {
      out.P(u, v) = 2.0 * out.P_window(u, v) - p1(u, v);
      row += out.P(u, v);
      out.series_gap = std::max(out.series_gap, std::fabs(out.P_series(u, v) - out.P(u, v)));
    }
    out.max_row_deficit = std::max(out.max_row_deficit, std::fabs(1.0 - row));
  }
  return out;
}

PerronResult perron(const linalg::Matrix& P, double tol, int max_iterations) {
  const std::size_t n = P.rows();
  if (n == 0 || P.cols() != n) throw ValidationError("matrix must be square and non-empty", "perron");
  linalg::Matrix R = P;
  for (std::size_t u = 0; u < n; ++u) {
    double s = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (P(u, v) < 0.0) throw ValidationError("negative entry", "perron");
      s += P(u, v);
    }
    if (std::fabs(s - 1.0) > 1e-8) throw NumericBudgetError("row sum deviates from 1 by more than 1e-8");
    for (std::size_t v = 0; v < n; ++v) R(u, v) /= s;
  }
  PerronResult out;
  out.pi.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int it = 1; it <= max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) simd::axpy(out.pi[u], R.row(u), next);
    const double z = simd::sum(next);
    double diff = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] /= z;
      diff = std::max(diff, std::fabs(next[v] - out.pi[v]));
    }
    out.pi.swap(next);
    out.iterations = it;
    if (diff < tol) break;
    if (it == max_iterations) throw NumericBudgetError("power iteration did not converge");
  }
  std::fill(next.begin(), next.end(), 0.0);
  for (std::size_t u = 0; u < n; ++u) simd::axpy(out.pi[u], R.row(u), next);
  for (std::size_t v = 0; v < n; ++v) out.residual = std::max(out.residual, std::fabs(next[v] - out.pi[v]));
  return out;
}

LambdaResult lambda_extraction(const FirstReturnData& frd, double t_max, int points, double regression_tolerance) {
  const std::size_t S = frd.states;
  const int N = frd.n_max;
  const double t_min = 10.0 / static_cast<double>(N);
  if (!(t_max > t_min) || points < 3) throw ValidationError("s grid needs t_max > 10/n_max and >= 3 points", "lambda.s_grid");
  LambdaResult out;
  for (int i = 0; i < points; ++i)
    out.t_grid.push_back(t_min * std::pow(t_max / t_min, static_cast<double>(i) / (points - 1)));
  // D[u*S+v][i] = P - sum_{n<=N} kernel s^n - fitted tail(s)
  std::vector<std::vector<double>> D(S * S, std::vector<double>(out.t_grid.size()));
  std::vector<double> acc(S * S);
  for (std::size_t i = 0; i < out.t_grid.size(); ++i) {
    const double s = 1.0 - out.t_grid[i];
    std::fill(acc.begin(), acc.end(), 0.0);
    double sn = 1.0;
    for (int n = 1; n <= N; ++n) {
      sn *= s;
      simd::axpy(sn, std::span<const double>(frd.kernel).subspan(static_cast<std::size_t>(n) * S * S, S * S), acc);
    }
    const double t32 = power_tail(N, 1.5, s), t2 = power_tail(N, 2.0, s);
    const double z32 = power_tail(N, 1.5, 1.0), z2 = power_tail(N, 2.0, 1.0);
    for (std::size_t u = 0; u < S; ++u)
      for (std::size_t v = 0; v < S; ++v) {
        // tail(s) uses the same two-term fit as the tail mass at s = 1
        const double a = frd.tail_amplitude(u, v);
        const double b = (frd.tail_mass(u, v) - a * z32) / z2;
        D[u * S + v][i] = frd.P(u, v) - acc[u * S + v] - (a * t32 + b * t2);
      }
  }
  std::vector<std::vector<double>> cols(2, std::vector<double>(out.t_grid.size()));
  for (std::size_t i = 0; i < out.t_grid.size(); ++i) {
    cols[0][i] = std::sqrt(out.t_grid[i]);
    cols[1][i] = out.t_grid[i];
  }
  out.Lambda = linalg::Matrix(S, S);
  double global_signal = 0.0;
  std::vector<stats::OriginFit> fits;
  for (std::size_t e = 0; e < S * S; ++e) {
    fits.push_back(stats::fit_through_origin(cols, D[e]));
    global_signal = std::max(global_signal, fits.back().rms_signal);
  }
  for (std::size_t e = 0; e < S * S; ++e) {
    out.Lambda(e / S, e % S) = fits[e].coef[0];
    const double rel = fits[e].rms_residual / (fits[e].rms_signal + 1e-3 * global_signal);
    out.max_relative_residual = std::max(out.max_relative_residual, rel);
  }
  out.unstable = out.max_relative_residual > regression_tolerance;
  const auto pr = perron(frd.P);
  out.pi = pr.pi;
  out.pi_residual = pr.residual;
  for (std::size_t u = 0; u < S; ++u)
    for (std::size_t v = 0; v < S; ++v) out.gamma += out.pi[u] * out.Lambda(u, v);
  out.c_star = out.pi[0] / (std::sqrt(std::numbers::pi) * out.gamma);
  return out;
}

EntryWeights entry_weights(long K, double beta, const LadderData& ladder) {
  const auto window = chains::default_eta_window(beta);
  const long top = K + window.hi + 4;
  const auto q = chains::build_y_kernel(beta, top, window);
  EntryWeights w;
  for (long u = 0; u <= K; ++u) {
    double s = 0.0;
    const long f = q.first(u);
    const auto r = q.row(u);
    for (std::size_t t = 0; t < r.size(); ++t) {
      const long x = f + static_cast<long>(t);
      if (x > K) s += r[t] * ladder.H_K(x + 1, K);
    }
    w.A.push_back(s);
  }
  for (long v = 0; v <= K; ++v) {
    double s = 0.0;
    for (long y = K + 1; y <= top; ++y) s += ladder.H_K(y, K) * q.at(y, v);
    w.B.push_back(s);
  }
  return w;
}

RuinConstantFit fit_ruin_constant(std::span<const int> ns, std::span<const double> r) {
  if (ns.size() != r.size() || ns.size() < 3) throw ValidationError("need at least three grid points", "fit.n");
  RuinConstantFit out;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1 || (i > 0 && ns[i] <= ns[i - 1])) throw ValidationError("grid must be increasing", "fit.n");
    if (!(r[i] > 0.0)) throw ValidationError("ruin probabilities must be positive", "fit.r");
    out.scaled.push_back(r[i] * std::sqrt(static_cast<double>(ns[i])));
  }
  int sign = 0;
  for (std::size_t i = 1; i < out.scaled.size(); ++i) {
    const double d = out.scaled[i] - out.scaled[i - 1];
    if (std::fabs(d) <= 1e-12 * out.scaled[i]) continue;
    const int sg = d > 0 ? 1 : -1;
    if (sign != 0 && sg != sign) out.monotone = false;
    sign = sg;
  }
  const std::size_t m = ns.size();
  std::vector<std::vector<double>> cols(3, std::vector<double>(3));
  std::vector<double> y(3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double n = static_cast<double>(ns[m - 3 + i]);
    cols[0][i] = 1.0;
    cols[1][i] = 1.0 / std::sqrt(n);
    cols[2][i] = 1.0 / n;
    y[i] = out.scaled[m - 3 + i];
  }
  out.c_hat = stats::fit_through_origin(cols, y).coef[0];
  const double n1 = ns[m - 2], n2 = ns[m - 1];
  const double f1 = out.scaled[m - 2], f2 = out.scaled[m - 1];
  const double a = (f1 - f2) / (1.0 / std::sqrt(n1) - 1.0 / std::sqrt(n2));
  const double c2 = f2 - a / std::sqrt(n2);
  out.spread = std::fabs(out.c_hat - c2) / out.c_hat;
  return out;
}

KSweep k_sweep(double beta, std::span<const long> Ks, const FirstReturnOptions& opt, double tolerance) {
  if (Ks.size() < 2) throw ValidationError("need at least two K values", "k_grid");
  KSweep out;
  for (long K : Ks) {
    const auto frd = first_return_matrix(K, beta, opt);
    const auto lam = lambda_extraction(frd, 0.02, 16, opt.regression_tolerance);
    KSweepEntry e;
    e.K = K;
    e.gamma = lam.gamma;
    e.c_star = lam.c_star;
    e.pi0 = lam.pi[0];
    e.max_row_deficit = frd.max_row_deficit;
    e.series_gap = frd.series_gap;
    e.residual = lam.max_relative_residual;
    e.unstable = lam.unstable;
    out.entries.push_back(e);
  }
  for (std::size_t i = 0; i + 1 < out.entries.size(); ++i)
    out.gamma_steps.push_back(std::fabs(out.entries[i + 1].gamma - out.entries[i].gamma) / out.entries[i].gamma);
  for (std::size_t i = 0; i < out.gamma_steps.size(); ++i) {
    bool ok = true;
    double worst = 0.0;
    for (std::size_t j = i; j < out.gamma_steps.size(); ++j) {
      worst = std::max(worst, out.gamma_steps[j]);
      if (out.gamma_steps[j] >= tolerance) ok = false;
    }
    if (ok) {
      out.K_stable = out.entries[i].K;
      out.max_gamma_step_after = worst;
      break;
    }
  }
  return out;
}

}  // namespace tsaw::renewal
