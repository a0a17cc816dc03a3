#include "tsaw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "tsaw/error.hpp"

namespace tsaw::stats {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("x and y lengths differ", "fit_line");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("need at least two points", "fit_line");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw ValidationError("x values are all equal", "fit_line");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / static_cast<double>(n));
  f.points = n;
  return f;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw ValidationError("non-positive abscissa", "fit_loglog");
    lx[i] = std::log(x[i]);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw ValidationError("non-positive ordinate", "fit_loglog");
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

LineFit fit_loglinear(std::span<const double> x, std::span<const double> y) {
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw ValidationError("non-positive ordinate", "fit_loglinear");
    ly[i] = std::log(y[i]);
  }
  return fit_line(x, ly);
}

OriginFit fit_through_origin(std::span<const std::vector<double>> columns, std::span<const double> y) {
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  if (k == 0 || n < k) throw ValidationError("underdetermined regression", "fit_through_origin");
  for (const auto& c : columns)
    if (c.size() != n) throw ValidationError("column length mismatch", "fit_through_origin");
  // Normal equations, solved by Gaussian elimination with partial pivoting (k is tiny).
  std::vector<double> a(k * (k + 1), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * columns[j][t];
      a[i * (k + 1) + j] = s;
    }
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * y[t];
    a[i * (k + 1) + k] = s;
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::fabs(a[r * (k + 1) + c]) > std::fabs(a[piv * (k + 1) + c])) piv = r;
    if (a[piv * (k + 1) + c] == 0.0) throw NumericBudgetError("singular regression design");
    if (piv != c)
      for (std::size_t j = 0; j <= k; ++j) std::swap(a[c * (k + 1) + j], a[piv * (k + 1) + j]);
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = a[r * (k + 1) + c] / a[c * (k + 1) + c];
      for (std::size_t j = c; j <= k; ++j) a[r * (k + 1) + j] -= f * a[c * (k + 1) + j];
    }
  }
  OriginFit out;
  out.coef.assign(k, 0.0);
  for (std::size_t c = k; c-- > 0;) {
    double s = a[c * (k + 1) + k];
    for (std::size_t j = c + 1; j < k; ++j) s -= a[c * (k + 1) + j] * out.coef[j];
    out.coef[c] = s / a[c * (k + 1) + c];
  }
  double ss = 0.0, sy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < k; ++i) pred += out.coef[i] * columns[i][t];
    ss += (y[t] - pred) * (y[t] - pred);
    sy += y[t] * y[t];
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(n));
  out.rms_signal = std::sqrt(sy / static_cast<double>(n));
  return out;
}

double binomial_se(double p, double trials) {
  if (trials <= 0.0) return 0.0;
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / trials);
}

void Moments::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void Moments::merge(const Moments& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

double Moments::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double Moments::se_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

}  // namespace tsaw::stats
