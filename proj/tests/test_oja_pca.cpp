#include <cmath>
#include <random>

#include "doctest.h"
#include "opca/batch_pca.hpp"
#include "opca/errors.hpp"
#include "opca/oja_pca.hpp"
#include "test_support.hpp"

using namespace opca;
using namespace opca::testing;

namespace {

OjaConfig frozen_mean(double eta, std::uint64_t ortho_period) {
  OjaConfig cfg;
  cfg.schedule.eta0 = eta;
  cfg.ortho_period = ortho_period;
  cfg.track_mean = false;
  return cfg;
}

// Rows scaled per coordinate by sqrt(variances).
DenseMatrix axis_gaussian(std::size_t m, const Vector& variances, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DenseMatrix out(m, variances.size());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < variances.size(); ++c) out(r, c) = std::sqrt(variances[c]) * normal(rng);
  return out;
}

}  // namespace

TEST_CASE("init_state") {
  const OjaPcaState s = init_state(12, 5, 42);
  CHECK(s.input_dim() == 12);
  CHECK(s.num_components() == 5);
  CHECK(orthonormality_defect(s.basis) < 1e-6);
  CHECK(s.steps_taken == 0);
  CHECK_FALSE(s.mean.usable());

  CHECK(init_state(12, 5, 42) == s);
  CHECK_FALSE(init_state(12, 5, 43) == s);

  const OjaPcaState full = init_state(6, 6, 1);
  CHECK(max_abs_diff(matmul(full.basis, full.basis.transpose()), DenseMatrix::identity(6)) < 1e-6);

  CHECK_THROWS_AS(init_state(3, 4, 0), InputError);
  CHECK_THROWS_AS(init_state(3, 0, 0), InputError);
  OjaConfig bad;
  bad.ortho_period = 0;
  CHECK_THROWS_AS(init_state(3, 2, 0, bad), InputError);
}

TEST_CASE("project, reconstruct, quantize") {
  std::mt19937_64 rng(8);

  SUBCASE("z equal to mean projects to zero") {
    OjaPcaState s = init_state(5, 2, 3);
    s.mean = gamma_fade_update(s.mean, Vector{1, 2, 3, 4, 5});
    const Vector y = project(s, Vector{1, 2, 3, 4, 5});
    CHECK(norm2(y) < 1e-15);
    CHECK(reconstruct(s, Vector{0, 0}) == s.mean.mu);
  }
  SUBCASE("coordinate projection") {
    const OjaPcaState s = make_state(DenseMatrix::identity(4).left_cols(2));
    CHECK(project(s, Vector{7, -3, 9, 1}) == Vector{7, -3});
  }
  SUBCASE("axis quantization") {
    const OjaPcaState s = make_state(DenseMatrix{{1}, {0}});
    CHECK(quantize(s, Vector{3, 4}) == Vector{3, 0});
  }
  SUBCASE("random properties") {
    for (int trial = 0; trial < 25; ++trial) {
      OjaPcaState s = init_state(8, 3, trial);
      Vector mu(8);
      std::normal_distribution<double> normal;
      for (double& x : mu) x = normal(rng);
      s.mean = gamma_fade_update(s.mean, mu);
      Vector z(8);
      for (double& x : z) x = 3.0 * normal(rng);

      Vector zc = z;
      for (std::size_t i = 0; i < 8; ++i) zc[i] -= mu[i];
      CHECK(norm2(project(s, z)) <= norm2(zc) + 1e-9);

      const Vector q = quantize(s, z);
      CHECK(max_abs_diff(quantize(s, q), q) < 1e-9);

      Vector residual = z;
      for (std::size_t i = 0; i < 8; ++i) residual[i] -= q[i];
      for (double c : matvec_t(s.basis, residual)) CHECK(std::abs(c) < 1e-9);

      // Points on mu + span(C) are fixed.
      const Vector on_plane = reconstruct(s, Vector{0.5, -1.5, 2.0});
      CHECK(max_abs_diff(quantize(s, on_plane), on_plane) < 1e-9);
    }
  }
  SUBCASE("full rank is the identity") {
    const OjaPcaState s = init_state(5, 5, 17);
    const Vector z{1, -2, 3.5, 0, 8};
    CHECK(max_abs_diff(reconstruct(s, project(s, z)), z) < 1e-9);
    CHECK(max_abs_diff(quantize(s, z), z) < 1e-9);
  }
  SUBCASE("dimension errors") {
    const OjaPcaState s = init_state(4, 2, 0);
    CHECK_THROWS_AS(project(s, Vector{1, 2, 3}), InputError);
    CHECK_THROWS_AS(reconstruct(s, Vector{1, 2, 3}), InputError);
    CHECK_THROWS_AS(quantize(s, Vector{1, 2, 3, NAN}), InputError);
  }
}

TEST_CASE("oja_step") {
  SUBCASE("hand-evaluated update") {
    OjaPcaState s = make_state(DenseMatrix{{1}, {0}}, frozen_mean(0.1, 1000));
    const OjaStepTrace t = oja_step(s, DenseMatrix{{1, 2}});
    CHECK(t.projected == DenseMatrix{{1}});
    CHECK(t.gram == DenseMatrix{{1}});
    // dC = [1,2]ᵀ·1 - [1,0]ᵀ·1 = [0,2]ᵀ
    CHECK(t.delta_norm == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(t.eta_used == 0.1);
    CHECK(s.basis(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.basis(1, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.steps_taken == 1);
    CHECK_FALSE(t.reorthonormalized);
  }
  SUBCASE("zero batch leaves the basis unchanged") {
    OjaPcaState s = init_state(4, 2, 5, frozen_mean(0.05, 1));
    const DenseMatrix before = s.basis;
    const OjaStepTrace t = oja_step(s, DenseMatrix(8, 4));
    CHECK(t.delta_norm == 0.0);
    CHECK(max_abs_diff(s.basis, before) < 1e-15);
  }
  SUBCASE("mean is updated before centering") {
    OjaPcaState s = init_state(3, 1, 2);
    const DenseMatrix batch{{1, 2, 3}, {3, 2, 1}};
    const OjaStepTrace t = oja_step(s, batch);
    CHECK(s.mean.step == 1);
    CHECK(s.mean.mu == Vector{2, 2, 2});
    // Centered rows are ±(-1,0,1) so the projections sum to zero.
    CHECK(std::abs(t.projected(0, 0) + t.projected(1, 0)) < 1e-15);
  }
  SUBCASE("single-row batches are accepted") {
    OjaPcaState s = init_state(4, 2, 9);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) oja_step(s, random_matrix(1, 4, rng));
    CHECK(orthonormality_defect(s.basis) < 1e-6);
  }
  SUBCASE("learning-rate schedule") {
    LearningRateSchedule sched{LearningRateSchedule::Kind::inverse_time, 0.5, 0.25};
    CHECK(sched.eta(0) == 0.5);
    CHECK(sched.eta(4) == 0.25);
    OjaConfig cfg;
    cfg.schedule = sched;
    OjaPcaState s = init_state(3, 1, 4, cfg);
    std::mt19937_64 rng(2);
    oja_step(s, random_matrix(4, 3, rng, 0.1));
    oja_step(s, random_matrix(4, 3, rng, 0.1));
    CHECK(oja_step(s, random_matrix(4, 3, rng, 0.1)).eta_used == doctest::Approx(0.5 / 1.5));
  }
  SUBCASE("rejects bad batches without touching state") {
    OjaPcaState s = init_state(3, 2, 1);
    const OjaPcaState before = s;
    CHECK_THROWS_AS(oja_step(s, DenseMatrix(0, 3)), InputError);
    CHECK_THROWS_AS(oja_step(s, DenseMatrix(2, 4)), InputError);
    CHECK(s == before);
  }
  SUBCASE("drift violation is a numerical failure and leaves state intact") {
    OjaPcaState s = make_state(DenseMatrix{{1}, {0}}, frozen_mean(1.0, 2));
    const OjaPcaState before = s;
    CHECK_THROWS_AS(oja_step(s, DenseMatrix{{10, 20}}), NumericalError);
    CHECK(s == before);
  }
  SUBCASE("a step that re-orthonormalizes may drift transiently") {
    OjaPcaState s = make_state(DenseMatrix{{1}, {0}}, frozen_mean(1.0, 1));
    const OjaStepTrace tr = oja_step(s, DenseMatrix{{10, 20}});
    CHECK(tr.drift > kDriftBound);
    CHECK(tr.reorthonormalized);
    CHECK(orthonormality_defect(s.basis) < 1e-12);
  }
  SUBCASE("top component aligns with the dominant axis") {
    std::mt19937_64 rng(123);
    OjaConfig cfg;
    cfg.schedule.eta0 = 0.01;
    cfg.ortho_period = 1;
    OjaPcaState s = init_state(5, 1, 77, cfg);
    const Vector variances{10, 1, 1, 1, 1};
    for (int step = 0; step < 5000; ++step) oja_step(s, axis_gaussian(32, variances, rng));
    CHECK(std::abs(s.basis(0, 0)) > 0.99);
    CHECK(orthonormality_defect(s.basis) < 1e-6);
  }
}

TEST_CASE("reorthonormalize") {
  std::mt19937_64 rng(31);
  SUBCASE("orthonormal basis is a fixed point") {
    OjaPcaState s = init_state(7, 3, 2);
    const DenseMatrix before = s.basis;
    reorthonormalize(s);
    CHECK(max_abs_diff(s.basis, before) < 1e-9);
  }
  SUBCASE("column scaling is undone") {
    const DenseMatrix q = random_orthonormal(5, 2, rng);
    OjaPcaState s = make_state(q);
    for (std::size_t r = 0; r < 5; ++r) {
      s.basis(r, 0) *= 2.0;
      s.basis(r, 1) *= 3.0;
    }
    reorthonormalize(s);
    CHECK(max_abs_diff(s.basis, q) < 1e-12);
  }
  SUBCASE("perturbed basis: orthonormal afterwards, span preserved") {
    for (int trial = 0; trial < 20; ++trial) {
      OjaPcaState s = init_state(9, 4, trial);
      s.basis += random_matrix(9, 4, rng, 0.05);
      const DenseMatrix spanning = orthonormalize_columns(s.basis);
      reorthonormalize(s);
      CHECK(orthonormality_defect(s.basis) < 1e-6);
      for (double a : principal_angles(spanning, s.basis)) CHECK(a < 1e-6);
    }
  }
  SUBCASE("duplicate columns stay finite") {
    OjaPcaState s = make_state(DenseMatrix::identity(3).left_cols(2));
    for (std::size_t r = 0; r < 3; ++r) s.basis(r, 1) = s.basis(r, 0);
    reorthonormalize(s);
    CHECK(s.basis.all_finite());
    // Gram eigenvalues (2, 0); the floored direction is annihilated by C, so
    // both columns become e1 / sqrt(2) and ||CᵀC - I||_F = 1.
    CHECK(orthonormality_defect(s.basis) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.basis(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  }
  SUBCASE("non-finite basis") {
    OjaPcaState s = init_state(3, 1, 0);
    s.basis(0, 0) = NAN;
    CHECK_THROWS_AS(reorthonormalize(s), NumericalError);
  }
}

TEST_CASE("explained_variance, sort_components, truncate") {
  std::mt19937_64 rng(71);
  SUBCASE("constant data has zero variance") {
    const OjaPcaState s = init_state(3, 2, 0);
    DenseMatrix data(10, 3);
    for (std::size_t r = 0; r < 10; ++r) data.set_col(0, Vector(10, 4.0));
    for (double v : explained_variance(s, data)) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("axis-aligned basis recovers coordinate variances") {
    const OjaPcaState s = make_state(DenseMatrix::identity(2));
    const DenseMatrix data = axis_gaussian(20000, Vector{4, 1}, rng);
    const Vector var = explained_variance(s, data);
    CHECK(var[0] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(var[1] == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("projection cannot increase variance") {
    for (int trial = 0; trial < 10; ++trial) {
      const OjaPcaState s = init_state(6, 3, trial);
      const DenseMatrix data = random_matrix(50, 6, rng);
      double sum = 0.0;
      for (double v : explained_variance(s, data)) sum += v;
      CHECK(sum <= trace(sample_covariance(data)) + 1e-8);
    }
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(explained_variance(init_state(3, 1, 0), DenseMatrix(1, 3)), InputError);
  }
  SUBCASE("sorting swaps misordered components") {
    const OjaPcaState s = make_state(DenseMatrix::identity(2));
    const DenseMatrix data = axis_gaussian(5000, Vector{1, 4}, rng);
    const OjaPcaState sorted = sort_components(s, data);
    CHECK(sorted.basis == DenseMatrix{{0, 1}, {1, 0}});
    const Vector var = explained_variance(sorted, data);
    CHECK(var[0] > var[1]);
    // Already sorted: identical.
    CHECK(sort_components(sorted, data) == sorted);
  }
  SUBCASE("sorting leaves the quantizer unchanged") {
    OjaPcaState s = init_state(6, 4, 5);
    s.mean = gamma_fade_update(s.mean, Vector{1, 0, -1, 2, 0, 3});
    const DenseMatrix data = random_matrix(40, 6, rng);
    const OjaPcaState sorted = sort_components(s, data);
    const Vector z{0.3, -2, 1, 5, 0, -1};
    CHECK(max_abs_diff(quantize(s, z), quantize(sorted, z)) < 1e-9);
  }
  SUBCASE("truncation") {
    const OjaPcaState s = init_state(8, 5, 9);
    CHECK(truncate(s, 5) == s);
    CHECK(truncate(s, 2).num_components() == 2);
    CHECK_THROWS_AS(truncate(s, 0), InputError);
    CHECK_THROWS_AS(truncate(s, 6), InputError);

    const DenseMatrix data = axis_gaussian(400, Vector{9, 5, 4, 2, 1, 1, 0.5, 0.1}, rng);
    const OjaPcaState sorted = sort_components(s, data);
    double prev = 1e300;
    for (std::size_t k = 1; k <= 5; ++k) {
      const double mse = reconstruction_mse(truncate(sorted, k).basis, data);
      CHECK(mse <= prev + 1e-12);
      prev = mse;
    }
  }
}
