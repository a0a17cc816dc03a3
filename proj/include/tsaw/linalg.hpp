#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tsaw::linalg {

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {a_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return a_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

struct PivotReport {
  double min_abs_pivot = 0.0;
  double max_abs_pivot = 0.0;
  // max|pivot| / min|pivot|; a cheap conditioning indicator.
  double pivot_ratio() const { return min_abs_pivot > 0.0 ? max_abs_pivot / min_abs_pivot : 0.0; }
};

// LU with partial pivoting. Throws NumericBudgetError on an exactly zero pivot.
class DenseLU {
 public:
  explicit DenseLU(Matrix a);
  std::size_t size() const { return lu_.rows(); }
  void solve_in_place(std::span<double> b) const;
  std::vector<double> solve(std::span<const double> b) const;
  const PivotReport& pivots() const { return report_; }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  PivotReport report_;
};

// Square band matrix with kl sub- and ku super-diagonals. Storage reserves an
// extra kl super-diagonals for fill-in from row interchanges.
class BandedMatrix {
 public:
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku);
  std::size_t size() const { return n_; }
  std::size_t lower() const { return kl_; }
  std::size_t upper() const { return ku_; }
  // Entry (i,j) with i-kl <= j <= i+ku.
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  // y = A x for the original band.
  std::vector<double> multiply(std::span<const double> x) const;

 private:
  friend class BandedLU;
  double* row_ptr(std::size_t i, std::size_t col) { return a_.data() + i * width_ + (col + kl_ - i); }
  const double* row_ptr(std::size_t i, std::size_t col) const {
    return a_.data() + i * width_ + (col + kl_ - i);
  }
  std::size_t n_, kl_, ku_, width_;
  std::vector<double> a_;
};

class BandedLU {
 public:
  explicit BandedLU(BandedMatrix a);
  std::size_t size() const { return lu_.n_; }
  void solve_in_place(std::span<double> b) const;
  const PivotReport& pivots() const { return report_; }

 private:
  BandedMatrix lu_;
  std::vector<double> mult_;
  std::vector<std::size_t> piv_;
  PivotReport report_;
};

// max_i |(A x - b)_i|
double residual_inf(const Matrix& a, std::span<const double> x, std::span<const double> b);

}  // namespace tsaw::linalg
