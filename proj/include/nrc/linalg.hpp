#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nrc/errors.hpp"

namespace nrc {

using Vector = std::vector<double>;

/// Dense column-major matrix of doubles. Columns are samples wherever a
/// matrix acts as a dictionary, so per-sample access stays contiguous.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

  std::span<double> col(std::size_t c) { return {data_.data() + c * rows_, rows_}; }
  std::span<const double> col(std::size_t c) const {
    return {data_.data() + c * rows_, rows_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Cholesky factor of A + ridge*I for symmetric positive-definite A.
/// Only the lower triangle of A is referenced when factoring.
class SpdFactor {
 public:
  std::size_t dimension() const { return dim_; }

  /// Solves (A + ridge*I) x = b via the stored factor.
  Vector solve(const Vector& b) const;

 private:
  friend SpdFactor spd_factor(const DenseMatrix& a, double ridge);
  std::size_t dim_ = 0;
  std::vector<double> lower_;  // column-major, lower triangle holds L
};

/// X^T X, exactly symmetric: each off-diagonal pair is the same dot product.
DenseMatrix gram(const DenseMatrix& x);

/// Factors A + ridge*I. Throws NotPositiveDefinite when a pivot is not
/// strictly positive (rank-deficient or indefinite input).
SpdFactor spd_factor(const DenseMatrix& a, double ridge);

Vector solve_spd(const SpdFactor& f, const Vector& b);

/// X*v, or X^T*v when transposed.
Vector matvec(const DenseMatrix& x, const Vector& v, bool transposed = false);

// vector helpers shared by the solvers
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double linf_norm(std::span<const double> v);
double linf_diff(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> v);

}  // namespace nrc
