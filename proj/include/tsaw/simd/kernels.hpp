#pragma once

#include <cstddef>
#include <span>

namespace tsaw::simd {

// Dense vector primitives used by the banded chain evolutions and the LU solvers.
// Every variant must produce bit-identical axpy/scale results; reductions may
// differ by summation order only.
struct KernelTable {
  const char* name;
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*scale)(double a, double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*abs_diff_sum)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();

// Selected once on first use. TSAW_SIMD=scalar in the environment forces the reference path.
const KernelTable& active();

// Test hook; pass nullptr to restore automatic selection.
void override_active(const KernelTable* table);

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double abs_diff_sum(std::span<const double> x, std::span<const double> y) {
  return active().abs_diff_sum(x.data(), y.data(), x.size());
}

}  // namespace tsaw::simd
