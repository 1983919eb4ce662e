#include "opca/oja_pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "opca/errors.hpp"

namespace opca {

namespace {

void check_vector(std::span<const double> v, std::size_t expected, const char* op) {
  if (v.size() != expected) {
    reject(InputErrorKind::dimension_mismatch, std::string(op) + ": expected length " + std::to_string(expected) +
                                                   ", got " + std::to_string(v.size()));
  }
  for (double x : v)
    if (!std::isfinite(x)) reject(InputErrorKind::non_finite, std::string(op) + ": non-finite input");
}

void check_config(const OjaConfig& config) {
  if (config.ortho_period == 0) reject("ortho_period must be at least 1");
  if (!(config.eps_ortho > 0.0)) reject("eps_ortho must be positive");
  if (!(config.schedule.eta0 > 0.0)) reject("eta0 must be positive");
  if (!(config.schedule.decay >= 0.0)) reject("eta decay must be nonnegative");
}

OjaPcaState assemble(DenseMatrix basis, const OjaConfig& config) {
  OjaPcaState s;
  s.mean = GammaFadeMean(basis.rows(), config.gamma);
  s.basis = std::move(basis);
  s.schedule = config.schedule;
  s.ortho_period = config.ortho_period;
  s.eps_ortho = config.eps_ortho;
  s.track_mean = config.track_mean;
  return s;
}

}  // namespace

double LearningRateSchedule::eta(std::uint64_t t) const {
  switch (kind) {
    case Kind::constant: return eta0;
    case Kind::inverse_time: return eta0 / (1.0 + decay * static_cast<double>(t));
  }
  return eta0;
}

Vector OjaPcaState::center() const {
  if (!mean.usable()) return Vector(input_dim(), 0.0);
  return mean.mu;
}

OjaPcaState init_state(std::size_t input_dim, std::size_t num_components, std::uint64_t seed,
                       const OjaConfig& config) {
  if (num_components == 0 || num_components > input_dim) {
    reject("init_state: need 1 <= Q <= N, got N=" + std::to_string(input_dim) +
           ", Q=" + std::to_string(num_components));
  }
  check_config(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DenseMatrix g(input_dim, num_components);
  for (double& x : g.data()) x = normal(rng);
  return assemble(orthonormalize_columns(g), config);
}

OjaPcaState make_state(DenseMatrix basis, const OjaConfig& config) {
  if (basis.cols() == 0 || basis.cols() > basis.rows()) reject("make_state: need 1 <= Q <= N");
  if (!basis.all_finite()) reject(InputErrorKind::non_finite, "make_state: non-finite basis");
  if (orthonormality_defect(basis) >= 1e-6) {
    reject(InputErrorKind::not_orthonormal, "make_state: basis columns are not orthonormal");
  }
  check_config(config);
  return assemble(std::move(basis), config);
}

Vector project(const OjaPcaState& state, std::span<const double> z) {
  check_vector(z, state.input_dim(), "project");
  Vector centered(z.begin(), z.end());
  if (state.mean.usable())
    for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= state.mean.mu[i];
  return matvec_t(state.basis, centered);
}

Vector reconstruct(const OjaPcaState& state, std::span<const double> y) {
  check_vector(y, state.num_components(), "reconstruct");
  Vector out = matvec(state.basis, y);
  if (state.mean.usable())
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += state.mean.mu[i];
  return out;
}

Vector quantize(const OjaPcaState& state, std::span<const double> z) {
  return reconstruct(state, project(state, z));
}

OjaStepTrace oja_step(OjaPcaState& state, const DenseMatrix& batch) {
  const std::size_t n = state.input_dim();
  const std::size_t b = batch.rows();
  if (b == 0) reject("oja_step: empty batch");
  if (batch.cols() != n) {
    reject(InputErrorKind::dimension_mismatch, "oja_step: batch has " + std::to_string(batch.cols()) +
                                                   " columns, state expects " + std::to_string(n));
  }
  if (!batch.all_finite()) reject(InputErrorKind::non_finite, "oja_step: non-finite batch");

  // Mean first, then center with the updated mean.
  GammaFadeMean mean = state.mean;
  if (state.track_mean) {
    Vector batch_mean(n, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
      auto row = batch.row(r);
      for (std::size_t i = 0; i < n; ++i) batch_mean[i] += row[i];
    }
    for (double& x : batch_mean) x /= static_cast<double>(b);
    mean = gamma_fade_update(mean, batch_mean);
  }

  DenseMatrix centered = batch;
  if (mean.usable()) {
    for (std::size_t r = 0; r < b; ++r) {
      auto row = centered.row(r);
      for (std::size_t i = 0; i < n; ++i) row[i] -= mean.mu[i];
    }
  }

  OjaStepTrace trace;
  trace.projected = matmul(centered, state.basis);
  trace.gram = gram(trace.projected);
  DenseMatrix delta = matmul_tn(centered, trace.projected);
  delta -= matmul(state.basis, upper_triangular(trace.gram));
  delta *= 1.0 / static_cast<double>(b);
  trace.delta_norm = frobenius_norm(delta);
  trace.eta_used = state.schedule.eta(state.steps_taken);

  DenseMatrix basis = state.basis;
  delta *= trace.eta_used;
  basis += delta;
  if (!basis.all_finite()) throw NumericalError("oja_step: basis became non-finite");
  trace.drift = orthonormality_defect(basis);

  OjaPcaState next = state;
  next.basis = std::move(basis);
  next.mean = std::move(mean);
  next.steps_taken += 1;
  if (next.steps_taken % next.ortho_period == 0) {
    reorthonormalize(next);
    trace.reorthonormalized = true;
  } else if (!(trace.drift < kDriftBound)) {
    // The drifted basis would persist until the next re-orthonormalization.
    throw NumericalError("oja_step: orthonormality drift " + std::to_string(trace.drift) +
                         " exceeds bound " + std::to_string(kDriftBound) + " at step " +
                         std::to_string(state.steps_taken));
  }
  state = std::move(next);
  return trace;
}

void reorthonormalize(OjaPcaState& state) {
  if (!state.basis.all_finite()) throw NumericalError("reorthonormalize: non-finite basis");
  const DenseMatrix s_inv_sqrt = inv_sqrt_sym(gram(state.basis), state.eps_ortho);
  DenseMatrix basis = matmul(state.basis, s_inv_sqrt);
  state.basis = std::move(basis);
}

Vector explained_variance(const OjaPcaState& state, const DenseMatrix& data) {
  const std::size_t m = data.rows();
  if (m < 2) reject("explained_variance: need at least 2 samples");
  if (data.cols() != state.input_dim()) reject(InputErrorKind::dimension_mismatch, "explained_variance: width mismatch");

  Vector sample_mean(data.cols(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto row = data.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) sample_mean[i] += row[i];
  }
  for (double& x : sample_mean) x /= static_cast<double>(m);

  DenseMatrix centered = data;
  for (std::size_t r = 0; r < m; ++r) {
    auto row = centered.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] -= sample_mean[i];
  }
  const DenseMatrix y = matmul(centered, state.basis);
  Vector var(y.cols(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto row = y.row(r);
    for (std::size_t q = 0; q < row.size(); ++q) var[q] += row[q] * row[q];
  }
  for (double& v : var) v /= static_cast<double>(m);
  return var;
}

OjaPcaState sort_components(const OjaPcaState& state, const DenseMatrix& data) {
  const Vector var = explained_variance(state, data);
  std::vector<std::size_t> order(var.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return var[i] > var[j]; });

  OjaPcaState out = state;
  for (std::size_t k = 0; k < order.size(); ++k) out.basis.set_col(k, state.basis.col(order[k]));
  return out;
}

OjaPcaState truncate(const OjaPcaState& state, std::size_t k) {
  if (k == 0 || k > state.num_components()) {
    reject("truncate: k must lie in [1, " + std::to_string(state.num_components()) + "], got " + std::to_string(k));
  }
  OjaPcaState out = state;
  out.basis = state.basis.left_cols(k);
  return out;
}

}  // namespace opca
