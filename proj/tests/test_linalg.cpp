#include <cmath>

#include "doctest.h"
#include "opca/errors.hpp"
#include "opca/linalg.hpp"
#include "test_support.hpp"

using namespace opca;
using namespace opca::testing;

TEST_CASE("DenseMatrix rejects bad construction") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, Vector{1, 2, 3}), InputError);
  CHECK_THROWS_AS(DenseMatrix(1, 2, Vector{1, NAN}), InputError);
  CHECK_THROWS_AS(DenseMatrix(1, 1, Vector{INFINITY}), InputError);
  CHECK_THROWS_AS((DenseMatrix{{1, 2}, {3}}), InputError);
}

TEST_CASE("matmul") {
  SUBCASE("identity") {
    const DenseMatrix m{{1.5, -2}, {0.25, 7}};
    CHECK(matmul(DenseMatrix::identity(2), m) == m);
  }
  SUBCASE("hand arithmetic") {
    CHECK(matmul(DenseMatrix{{1, 2}, {3, 4}}, DenseMatrix{{0}, {1}}) == DenseMatrix{{2}, {4}});
  }
  SUBCASE("random 5x3 by 3x4 against triple loop") {
    std::mt19937_64 rng(7);
    const DenseMatrix a = random_matrix(5, 3, rng);
    const DenseMatrix b = random_matrix(3, 4, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(matmul_tn(a.transpose(), b), naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(gram(a), naive_matmul(a.transpose(), a)) < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    try {
      matmul(DenseMatrix(2, 3), DenseMatrix(2, 3));
      FAIL("expected throw");
    } catch (const InputError& e) {
      CHECK(e.kind() == InputErrorKind::dimension_mismatch);
    }
  }
}

TEST_CASE("sym_eig") {
  SUBCASE("diagonal") {
    const auto eig = sym_eig(DenseMatrix{{3, 0}, {0, 1}});
    CHECK(eig.eigenvalues == Vector{3, 1});
    CHECK(eig.eigenvectors == DenseMatrix::identity(2));
  }
  SUBCASE("diagonal out of order is sorted with vectors permuted") {
    const auto eig = sym_eig(DenseMatrix{{1, 0}, {0, 3}});
    CHECK(eig.eigenvalues == Vector{3, 1});
    CHECK(eig.eigenvectors == DenseMatrix{{0, 1}, {1, 0}});
  }
  SUBCASE("identity") {
    CHECK(sym_eig(DenseMatrix::identity(3)).eigenvalues == Vector{1, 1, 1});
  }
  SUBCASE("random 6x6 reconstruction and trace") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const DenseMatrix m = random_symmetric(6, rng);
      const auto eig = sym_eig(m);
      for (std::size_t i = 0; i + 1 < 6; ++i) CHECK(eig.eigenvalues[i] >= eig.eigenvalues[i + 1]);
      const DenseMatrix& u = eig.eigenvectors;
      const DenseMatrix rec = naive_matmul(naive_matmul(u, DenseMatrix::diagonal(eig.eigenvalues)), u.transpose());
      CHECK(frobenius_norm(rec - m) / frobenius_norm(m) < 1e-9);
      CHECK(orthonormality_defect(u) < 1e-8);
      double sum = 0.0;
      for (double l : eig.eigenvalues) sum += l;
      CHECK(std::abs(sum - trace(m)) <= 1e-10 * std::max(1.0, std::abs(trace(m))));
      // Sign convention: largest-magnitude entry of each eigenvector is positive.
      for (std::size_t c = 0; c < 6; ++c) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < 6; ++r)
          if (std::abs(u(r, c)) > std::abs(u(arg, c))) arg = r;
        CHECK(u(arg, c) > 0.0);
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sym_eig(DenseMatrix(2, 3)), InputError);
    try {
      sym_eig(DenseMatrix{{1, 2}, {0, 1}});
      FAIL("expected throw");
    } catch (const InputError& e) {
      CHECK(e.kind() == InputErrorKind::not_symmetric);
    }
    JacobiOptions starved;
    starved.max_sweeps = 0;
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(sym_eig(random_symmetric(5, rng), starved), NumericalError);
  }
  SUBCASE("zero matrix") {
    CHECK(sym_eig(DenseMatrix(3, 3)).eigenvalues == Vector{0, 0, 0});
  }
}

TEST_CASE("upper_triangular") {
  CHECK(upper_triangular(DenseMatrix{{1, 2}, {3, 4}}) == DenseMatrix{{1, 2}, {0, 4}});
  const DenseMatrix d = DenseMatrix::diagonal(Vector{2, -1, 5});
  CHECK(upper_triangular(d) == d);
  CHECK(upper_triangular(DenseMatrix{{9}}) == DenseMatrix{{9}});
  CHECK_THROWS_AS(upper_triangular(DenseMatrix(2, 3)), InputError);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix g = random_matrix(4, 4, rng);
    const DenseMatrix u = upper_triangular(g);
    CHECK(upper_triangular(u) == u);
  }
}

TEST_CASE("inv_sqrt_sym") {
  CHECK(max_abs_diff(inv_sqrt_sym(DenseMatrix::identity(4), 1.0), DenseMatrix::identity(4)) < 1e-15);
  CHECK(max_abs_diff(inv_sqrt_sym(DenseMatrix::identity(4), 1e-8), DenseMatrix::identity(4)) < 1e-15);
  CHECK(max_abs_diff(inv_sqrt_sym(DenseMatrix::diagonal(Vector{4, 1}), 1e-8), DenseMatrix::diagonal(Vector{0.5, 1})) <
        1e-15);
  // max(1e-12, 1e-8)^{-1/2} = 1e4
  const DenseMatrix floored = inv_sqrt_sym(DenseMatrix::diagonal(Vector{1e-12, 1}), 1e-8);
  CHECK(floored(0, 0) == doctest::Approx(1e4).epsilon(1e-12));
  CHECK(floored(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(floored(0, 1) == 0.0);

  CHECK_THROWS_AS(inv_sqrt_sym(DenseMatrix{{1, 2}, {0, 1}}, 1e-8), InputError);
  CHECK_THROWS_AS(inv_sqrt_sym(DenseMatrix::identity(2), 0.0), InputError);
}

TEST_CASE("inv_sqrt_sym property: M G M = I for well-conditioned PSD G") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const DenseMatrix a = random_matrix(n + 3, n, rng);
    DenseMatrix g = gram(a);
    for (std::size_t i = 0; i < n; ++i) g(i, i) += 1e-3;
    const DenseMatrix m = inv_sqrt_sym(g, 1e-8);
    CHECK(is_symmetric(m, 1e-14));
    CHECK(frobenius_norm(matmul(matmul(m, g), m) - DenseMatrix::identity(n)) < 1e-7);
  }
}

TEST_CASE("orthonormalize_columns") {
  std::mt19937_64 rng(2);
  const DenseMatrix q = orthonormalize_columns(random_matrix(10, 4, rng));
  CHECK(orthonormality_defect(q) < 1e-14);
  CHECK_THROWS_AS(orthonormalize_columns(DenseMatrix{{1, 2}, {2, 4}}), NumericalError);
}
