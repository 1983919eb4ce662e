#pragma once

// Exact covariance-eigendecomposition PCA, used as ground truth for the
// streaming estimator.

#include "opca/linalg.hpp"

namespace opca {

struct SpectrumEstimate {
  DenseMatrix covariance;    // N x N, 1/M normalization
  Vector eigenvalues;        // top q, descending
  DenseMatrix eigenvectors;  // N x q
  Vector sample_mean;
};

SpectrumEstimate batch_pca(const DenseMatrix& data, std::size_t q);

/// 1/M sample covariance and mean of the rows of `data`.
DenseMatrix sample_covariance(const DenseMatrix& data, Vector* mean_out = nullptr);

/// Principal angles between the column spans of two N x k orthonormal
/// matrices, ascending, in [0, pi/2].
Vector principal_angles(const DenseMatrix& a, const DenseMatrix& b);

/// Mean over rows of ||z~ - C Cᵀ z~||², z~ centered by the data's own mean.
double reconstruction_mse(const DenseMatrix& c, const DenseMatrix& data);

}  // namespace opca
