#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tsaw::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Fit of log(y) against log(x); all inputs must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

// Fit of log(y) against x; y must be positive.
LineFit fit_loglinear(std::span<const double> x, std::span<const double> y);

// Least squares y ≈ Σ_k coef_k * column_k with no intercept.
struct OriginFit {
  std::vector<double> coef;
  double rms_residual = 0.0;
  double rms_signal = 0.0;
};
OriginFit fit_through_origin(std::span<const std::vector<double>> columns, std::span<const double> y);

double binomial_se(double p, double trials);

// Mean/variance accumulator (Welford).
class Moments {
 public:
  void add(double x);
  void merge(const Moments& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double se_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace tsaw::stats
