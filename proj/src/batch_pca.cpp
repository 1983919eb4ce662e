#include "opca/batch_pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opca/errors.hpp"

namespace opca {

namespace {

DenseMatrix center_rows(const DenseMatrix& data, Vector& mean) {
  const std::size_t m = data.rows();
  mean.assign(data.cols(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto row = data.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) mean[i] += row[i];
  }
  for (double& x : mean) x /= static_cast<double>(m);
  DenseMatrix centered = data;
  for (std::size_t r = 0; r < m; ++r) {
    auto row = centered.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] -= mean[i];
  }
  return centered;
}

}  // namespace

DenseMatrix sample_covariance(const DenseMatrix& data, Vector* mean_out) {
  if (data.rows() < 2) reject("sample_covariance: need at least 2 samples");
  Vector mean;
  DenseMatrix cov = gram(center_rows(data, mean));
  cov *= 1.0 / static_cast<double>(data.rows());
  if (mean_out) *mean_out = std::move(mean);
  return cov;
}

SpectrumEstimate batch_pca(const DenseMatrix& data, std::size_t q) {
  if (data.rows() < 2) reject("batch_pca: need at least 2 samples, got " + std::to_string(data.rows()));
  if (q == 0 || q > data.cols()) reject("batch_pca: q must lie in [1, N]");
  SpectrumEstimate out;
  out.covariance = sample_covariance(data, &out.sample_mean);
  SymEigDecomposition eig = sym_eig(out.covariance);
  out.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(q));
  out.eigenvectors = eig.eigenvectors.left_cols(q);
  return out;
}

Vector principal_angles(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    reject(InputErrorKind::dimension_mismatch, "principal_angles: bases must have identical shape");
  }
  if (orthonormality_defect(a) >= 1e-6 || orthonormality_defect(b) >= 1e-6) {
    reject(InputErrorKind::not_orthonormal, "principal_angles: inputs must have orthonormal columns");
  }
  const std::size_t k = a.cols();

  // Cosines are the singular values of aᵀb; sines those of (I - aaᵀ) b.
  // Pairing them through atan2 keeps small angles accurate where arccos
  // alone loses half the digits.
  const DenseMatrix m = matmul_tn(a, b);
  const DenseMatrix residual = b - matmul(a, m);
  const Vector cos2 = sym_eig(gram(m)).eigenvalues;         // descending
  const Vector sin2 = sym_eig(gram(residual)).eigenvalues;  // descending

  Vector angles(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double c = std::clamp(std::sqrt(std::max(cos2[i], 0.0)), -1.0, 1.0);
    const double s = std::clamp(std::sqrt(std::max(sin2[k - 1 - i], 0.0)), -1.0, 1.0);
    angles[i] = std::atan2(s, c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double reconstruction_mse(const DenseMatrix& c, const DenseMatrix& data) {
  if (c.rows() != data.cols()) {
    reject(InputErrorKind::dimension_mismatch, "reconstruction_mse: basis has " + std::to_string(c.rows()) +
                                                   " rows, data has " + std::to_string(data.cols()) + " columns");
  }
  if (data.rows() == 0) reject("reconstruction_mse: empty data");
  Vector mean;
  const DenseMatrix centered = center_rows(data, mean);
  const DenseMatrix coeffs = matmul(centered, c);
  const DenseMatrix rec = matmul(coeffs, c.transpose());
  double total = 0.0;
  for (std::size_t i = 0; i < centered.size(); ++i) {
    const double d = centered.data()[i] - rec.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(data.rows());
}

}  // namespace opca
