#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsaw/linalg.hpp"
#include "tsaw/path_chains.hpp"
#include "tsaw/stats.hpp"

namespace tsaw::renewal {

struct LadderOptions {
  double tail_eps = 1e-3;       // bound on the final unassigned mass
  int max_iterations = 20000;   // steps of the walk killed on (-inf, 0]
  bool excess_correction = true;
  long u_max = 4096;            // renewal table range
};

// Ascending ladder height of the walk with increments nu, and its renewal function.
struct LadderData {
  double beta = 0.0;
  std::vector<double> chi;       // chi[k] = P(chi+ = k), chi[0] = 0
  double mean = 0.0;             // E[chi+]
  double raw_residual = 0.0;     // alive mass when the iteration stopped
  double unassigned = 0.0;       // 1 - sum chi after the excess correction
  int iterations = 0;
  std::vector<double> renewal_mass;  // U(m), U(0) = 1
  std::vector<double> H;             // H(u) = sum_{m<u} U(m), u = 0..u_max
  double H_at(long u) const;         // 0 for u <= 0; linear continuation past the table
  double H_K(long x, long K) const { return H_at(x - K); }
};

LadderData ladder_law(double beta, const LadderOptions& opt = {});

enum class WalkKind { S, Y };
const char* to_string(WalkKind k);

// Increment kernel nu(s - r) on rows 0..max_state.
chains::BandedRows build_s_kernel(double beta, long max_state);

// Killed n-step kernels p^{(K)}(n; x, y) for fixed starting points x in E_K.
struct ExcursionKernels {
  WalkKind kind = WalkKind::S;
  long K = 0;
  int n_max = 0;
  long window_top = 0;            // highest state kept
  std::vector<long> starts;
  // table[i][n][y - K - 1] for starts[i]
  std::vector<std::vector<std::vector<double>>> table;
  std::vector<double> leak;       // per start, mass lost above the window
  double p(int n, long x, long y) const;
  // log-log slope of p(n; x, x) over dyadic n in [n_lo, n_hi]
  stats::LineFit diagonal_decay(long x, int n_lo, int n_hi) const;
};

ExcursionKernels excursion_kernel(WalkKind kind, double beta, long K, int n_max, std::vector<long> starts,
                                  double leak_budget = 1e-10);

struct KernelGapReport {
  long K = 0;
  std::vector<long> x;
  std::vector<double> value;
  stats::LineFit fit;  // log value against x, over values above 1e-14
};
KernelGapReport killed_kernel_gap(double beta, long K, std::span<const long> xs, const LadderData& ladder);

struct FirstReturnOptions {
  int n_max = 8192;            // series length for route (a)
  long solve_height = 65536;   // window above K for route (b); a second solve uses twice this
  double leak_budget = 1e-10;
  double regression_tolerance = 0.02;  // relative rms residual flagging unstable extraction
};

struct FirstReturnData {
  long K = 0;
  int n_max = 0;
  std::size_t states = 0;  // K + 1
  // kernel[n * states^2 + u * states + v] = first-return kernel at time n; n = 0 row is zero.
  std::vector<double> kernel;
  linalg::Matrix P;              // route (b), extrapolated in the window height
  linalg::Matrix P_window;       // route (b) at the larger window only
  linalg::Matrix P_series;       // route (a): partial series plus fitted tail
  linalg::Matrix tail_amplitude; // A(u,v) in kernel(n) ~ A n^{-3/2}
  linalg::Matrix tail_mass;      // fitted tail beyond n_max
  double max_row_deficit = 0.0;  // max_u |1 - sum_v P(u,v)|
  double solve_residual = 0.0;
  double series_gap = 0.0;       // max |P_series - P|
  double series_tail_bound = 0.0;  // max tail_mass
  double k(int n, long u, long v) const { return kernel[(static_cast<std::size_t>(n) * states + u) * states + v]; }
};

FirstReturnData first_return_matrix(long K, double beta, const FirstReturnOptions& opt = {});

struct PerronResult {
  std::vector<double> pi;
  double residual = 0.0;  // max |pi P - pi|
  int iterations = 0;
};
PerronResult perron(const linalg::Matrix& P, double tol = 1e-12, int max_iterations = 1000000);

struct LambdaResult {
  linalg::Matrix Lambda;
  std::vector<double> pi;
  double gamma = 0.0;
  double c_star = 0.0;
  double max_relative_residual = 0.0;
  bool unstable = false;
  std::vector<double> t_grid;  // values of 1 - s used
  double pi_residual = 0.0;
};
// s grid: 1 - s geometric between 10/n_max and t_max.
LambdaResult lambda_extraction(const FirstReturnData& frd, double t_max = 0.02, int points = 16,
                               double regression_tolerance = 0.02);

struct EntryWeights {
  std::vector<double> A;  // A_{K,u} = sum_{x in E_K} Q(u,x) H_K(x+1)
  std::vector<double> B;  // B_{K,v} = sum_{y in E_K} H_K(y) Q(y,v)
};
EntryWeights entry_weights(long K, double beta, const LadderData& ladder);

struct RuinConstantFit {
  double c_hat = 0.0;
  double spread = 0.0;  // |three-point - two-point extrapolation| / c_hat
  bool monotone = true;
  std::vector<double> scaled;  // r_n sqrt(n) on the grid
};
// Extrapolates r_n sqrt(n) = c + a n^{-1/2} + b n^{-1} from the last three grid points.
RuinConstantFit fit_ruin_constant(std::span<const int> ns, std::span<const double> r);

struct KSweepEntry {
  long K = 0;
  double gamma = 0.0;
  double c_star = 0.0;
  double pi0 = 0.0;
  double max_row_deficit = 0.0;
  double series_gap = 0.0;
  double residual = 0.0;
  bool unstable = false;
};
struct KSweep {
  std::vector<KSweepEntry> entries;
  long K_stable = -1;             // first K from which every later gamma step is < tolerance
  double max_gamma_step_after = 0.0;
  std::vector<double> gamma_steps;  // relative change to the next K
};
KSweep k_sweep(double beta, std::span<const long> Ks, const FirstReturnOptions& opt = {},
               double tolerance = 0.10);

}  // namespace tsaw::renewal
