#include "nrc/linalg.hpp"

#include <cmath>
#include <string>

namespace nrc {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double linf_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

DenseMatrix gram(const DenseMatrix& x) {
  if (x.empty()) throw DimensionMismatch("gram: empty matrix");
  const std::size_t n = x.cols();
  DenseMatrix g(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      const double v = dot(x.col(i), x.col(j));
      g(i, j) = v;
      g(j, i) = v;  // same summation order on both sides, symmetric by construction
    }
  }
  return g;
}

SpdFactor spd_factor(const DenseMatrix& a, double ridge) {
  if (a.rows() != a.cols() || a.empty())
    throw DimensionMismatch("spd_factor: matrix must be square and non-empty");
  if (ridge < 0.0) throw InvalidConfig("spd_factor: ridge must be nonnegative");

  const std::size_t n = a.rows();
  SpdFactor f;
  f.dim_ = n;
  f.lower_.assign(n * n, 0.0);
  auto l = [&](std::size_t r, std::size_t c) -> double& { return f.lower_[c * n + r]; };

  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + ridge;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("spd_factor: pivot " + std::to_string(j) +
                                " is not positive");
    const double djj = std::sqrt(d);
    l(j, j) = djj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / djj;
    }
  }
  return f;
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != dim_) throw DimensionMismatch("solve: vector length != factor dimension");
  const std::size_t n = dim_;
  auto l = [&](std::size_t r, std::size_t c) { return lower_[c * n + r]; };

  Vector x(b);
  // forward substitution L w = b
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  // back substitution L^T x = w
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Vector solve_spd(const SpdFactor& f, const Vector& b) { return f.solve(b); }

Vector matvec(const DenseMatrix& x, const Vector& v, bool transposed) {
  if (x.empty()) throw DimensionMismatch("matvec: empty matrix");
  if (transposed) {
    if (v.size() != x.rows()) throw DimensionMismatch("matvec: X^T v needs len(v) == rows");
    Vector out(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) out[j] = dot(x.col(j), v);
    return out;
  }
  if (v.size() != x.cols()) throw DimensionMismatch("matvec: X v needs len(v) == cols");
  Vector out(x.rows(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) axpy(v[j], x.col(j), out);
  return out;
}

}  // namespace nrc
