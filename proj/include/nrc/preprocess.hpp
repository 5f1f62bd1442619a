#pragma once

#include <iosfwd>
#include <string>

#include "nrc/linalg.hpp"

namespace nrc {

/// Scales every column to unit l2 norm. Throws ZeroNormSample when a column
/// norm falls below 1e-12.
DenseMatrix l2_normalize_columns(const DenseMatrix& x);

struct PcaModel {
  Vector mean;                 // length D
  DenseMatrix components;      // D x d, orthonormal columns
  Vector explained_variance;   // length d, non-increasing
};

/// Fits a centered PCA with top-d eigenvectors of the sample covariance
/// (divisor N-1). Uses the N x N Gram system when N < D. Eigenvector signs
/// are fixed so the largest-magnitude entry of each component is positive.
PcaModel pca_fit(const DenseMatrix& x, std::size_t d);

/// components^T (X - mean), shape d x N.
DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x);

void save_pca(const std::string& path, const PcaModel& model);
PcaModel load_pca(const std::string& path);

namespace detail {
// Cyclic Jacobi eigensolver for symmetric matrices; eigenpairs returned
// sorted by non-increasing eigenvalue, ties kept in index order.
void jacobi_eigh(DenseMatrix a, Vector& eigenvalues, DenseMatrix& eigenvectors);

// raw blocks shared with the combined model container
void write_pca_block(std::ostream& os, const PcaModel& model);
PcaModel read_pca_block(std::istream& is);
}  // namespace detail

}  // namespace nrc
