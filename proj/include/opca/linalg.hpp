#pragma once

// Small dense linear algebra kernel: row-major double matrices, products,
// cyclic Jacobi eigendecomposition and the symmetric inverse square root used
// to re-orthonormalize PCA bases.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace opca {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of row-major entries; rejects wrong length or NaN/Inf.
  DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);
  /// Nested-list literal, e.g. DenseMatrix{{1, 2}, {3, 4}}.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);
  /// Single column from a vector.
  static DenseMatrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> v);

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const Vector& entries() const noexcept { return data_; }

  bool all_finite() const noexcept;

  DenseMatrix transpose() const;
  /// First `n` columns.
  DenseMatrix left_cols(std::size_t n) const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

struct SymEigDecomposition {
  Vector eigenvalues;        // descending
  DenseMatrix eigenvectors;  // orthonormal columns, eigenvectors.col(i) <-> eigenvalues[i]
};

struct JacobiOptions {
  int max_sweeps = 100;
  /// Converged once off(A) <= tolerance * ||A||_F.
  double tolerance = 1e-12;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ a; exactly symmetric by construction.
DenseMatrix gram(const DenseMatrix& a);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
/// aᵀ x
Vector matvec_t(const DenseMatrix& a, std::span<const double> x);

double frobenius_norm(const DenseMatrix& a);
double trace(const DenseMatrix& a);
/// ||aᵀa - I||_F, the orthonormality defect of a's columns.
double orthonormality_defect(const DenseMatrix& a);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Asymmetry tolerance is relative to max(1, max|a_ij|).
bool is_symmetric(const DenseMatrix& a, double rel_tol = 1e-10);

/// Cyclic Jacobi. Eigenvalues descending, each eigenvector signed so that its
/// largest-magnitude entry is positive.
SymEigDecomposition sym_eig(const DenseMatrix& m, const JacobiOptions& opts = {});

/// Entries strictly below the diagonal zeroed.
DenseMatrix upper_triangular(const DenseMatrix& g);

/// U diag(max(λ, eps)^{-1/2}) Uᵀ.
DenseMatrix inv_sqrt_sym(const DenseMatrix& g, double eps);

/// Modified Gram-Schmidt with one re-orthogonalization pass. Requires full
/// column rank.
DenseMatrix orthonormalize_columns(const DenseMatrix& a);

}  // namespace opca
