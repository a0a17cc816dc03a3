#include "tsaw/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "tsaw/error.hpp"
#include "tsaw/simd/kernels.hpp"

namespace tsaw::linalg {

DenseLU::DenseLU(Matrix a) : lu_(std::move(a)) {
  const std::size_t n = lu_.rows();
  if (lu_.cols() != n) throw ValidationError("matrix is not square", "DenseLU");
  perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  report_.min_abs_pivot = n ? INFINITY : 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    double best = std::fabs(lu_(c, c));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double v = std::fabs(lu_(r, c));
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best == 0.0) throw NumericBudgetError("singular matrix in dense LU");
    report_.min_abs_pivot = std::min(report_.min_abs_pivot, best);
    report_.max_abs_pivot = std::max(report_.max_abs_pivot, best);
    if (p != c) {
      std::swap_ranges(lu_.row(c).begin(), lu_.row(c).end(), lu_.row(p).begin());
      std::swap(perm_[c], perm_[p]);
    }
    const double inv = 1.0 / lu_(c, c);
    auto pivot_tail = lu_.row(c).subspan(c + 1);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = lu_(r, c) * inv;
      lu_(r, c) = f;
      if (f != 0.0) simd::axpy(-f, pivot_tail, lu_.row(r).subspan(c + 1));
    }
  }
}

void DenseLU::solve_in_place(std::span<double> b) const {
  const std::size_t n = size();
  if (b.size() != n) throw ValidationError("rhs length mismatch", "DenseLU");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i)
    y[i] -= simd::dot(lu_.row(i).first(i), std::span<const double>(y).first(i));
  for (std::size_t i = n; i-- > 0;) {
    const double s = simd::dot(lu_.row(i).subspan(i + 1), std::span<const double>(y).subspan(i + 1));
    y[i] = (y[i] - s) / lu_(i, i);
  }
  std::copy(y.begin(), y.end(), b.begin());
}

std::vector<double> DenseLU::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

BandedMatrix::BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), a_(n * (2 * kl + ku + 1), 0.0) {}

double& BandedMatrix::at(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_ || j + kl_ < i || j > i + ku_) throw ValidationError("entry outside band", "BandedMatrix");
  return *row_ptr(i, j);
}

double BandedMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw ValidationError("entry outside matrix", "BandedMatrix");
  if (j + kl_ < i || j > i + ku_) return 0.0;
  return *row_ptr(i, j);
}

std::vector<double> BandedMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t lo = i >= kl_ ? i - kl_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + ku_);
    y[i] = simd::dot({row_ptr(i, lo), hi - lo + 1}, x.subspan(lo, hi - lo + 1));
  }
  return y;
}

BandedLU::BandedLU(BandedMatrix a) : lu_(std::move(a)) {
  const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
  mult_.assign(n * std::max<std::size_t>(kl, 1), 0.0);
  piv_.resize(n);
  report_.min_abs_pivot = n ? INFINITY : 0.0;
  std::vector<double> tmp(kl + ku + 1);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t last = std::min(n - 1, c + kl);
    const std::size_t ucol = std::min(n - 1, c + kl + ku);
    const std::size_t len = ucol - c + 1;
    std::size_t p = c;
    double best = std::fabs(*lu_.row_ptr(c, c));
    for (std::size_t r = c + 1; r <= last; ++r) {
      const double v = std::fabs(*lu_.row_ptr(r, c));
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best == 0.0) throw NumericBudgetError("singular matrix in banded LU");
    report_.min_abs_pivot = std::min(report_.min_abs_pivot, best);
    report_.max_abs_pivot = std::max(report_.max_abs_pivot, best);
    piv_[c] = p;
    if (p != c) {
      double* rc = lu_.row_ptr(c, c);
      double* rp = lu_.row_ptr(p, c);
      std::copy(rc, rc + len, tmp.begin());
      std::copy(rp, rp + len, rc);
      std::copy(tmp.begin(), tmp.begin() + len, rp);
    }
    const double* prow = lu_.row_ptr(c, c);
    const double inv = 1.0 / prow[0];
    for (std::size_t r = c + 1; r <= last; ++r) {
      double* rr = lu_.row_ptr(r, c);
      const double f = rr[0] * inv;
      rr[0] = 0.0;
      mult_[c * std::max<std::size_t>(kl, 1) + (r - c - 1)] = f;
      if (f != 0.0 && len > 1) simd::active().axpy(-f, prow + 1, rr + 1, len - 1);
    }
  }
}

void BandedLU::solve_in_place(std::span<double> b) const {
  const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
  if (b.size() != n) throw ValidationError("rhs length mismatch", "BandedLU");
  const std::size_t stride = std::max<std::size_t>(kl, 1);
  for (std::size_t c = 0; c < n; ++c) {
    if (piv_[c] != c) std::swap(b[c], b[piv_[c]]);
    const double bc = b[c];
    if (bc == 0.0) continue;
    const std::size_t last = std::min(n - 1, c + kl);
    for (std::size_t r = c + 1; r <= last; ++r) b[r] -= mult_[c * stride + (r - c - 1)] * bc;
  }
  for (std::size_t c = n; c-- > 0;) {
    const std::size_t ucol = std::min(n - 1, c + kl + ku);
    const double* row = lu_.row_ptr(c, c);
    const double s = ucol > c ? simd::active().dot(row + 1, b.data() + c + 1, ucol - c) : 0.0;
    b[c] = (b[c] - s) / row[0];
  }
}

double residual_inf(const Matrix& a, std::span<const double> x, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    worst = std::max(worst, std::fabs(simd::dot(a.row(i), x) - b[i]));
  return worst;
}

}  // namespace tsaw::linalg
