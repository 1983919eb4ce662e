#pragma once

// Online PCA quantizer. The basis C (N x Q, orthonormal columns) follows the
// Oja-type subspace rule
//
//   Y  = Z~ C,   G = Yᵀ Y,
//   dC = (Z~ᵀ Y - C Up(G)) / B,
//   C <- C + eta_t dC,
//
// where Z~ is the minibatch centered by a gamma-fade running mean and Up(G)
// keeps the upper triangle (with diagonal) of G. Every `ortho_period` steps
// C is replaced by C (CᵀC)^{-1/2}.

#include <cstdint>
#include <span>

#include "opca/linalg.hpp"
#include "opca/streaming_stats.hpp"

namespace opca {

struct LearningRateSchedule {
  enum class Kind : std::uint64_t { constant = 0, inverse_time = 1 };

  Kind kind = Kind::constant;
  double eta0 = 0.01;
  double decay = 0.0;

  double eta(std::uint64_t t) const;

  friend bool operator==(const LearningRateSchedule&, const LearningRateSchedule&) = default;
};

struct OjaConfig {
  LearningRateSchedule schedule;
  double gamma = 0.99;
  std::uint64_t ortho_period = 1;
  double eps_ortho = 1e-8;
  /// When false the mean is frozen at its current value (zero for a fresh state).
  bool track_mean = true;
};

/// Largest tolerated ||CᵀC - I||_F for a basis left in place between
/// re-orthonormalizations.
inline constexpr double kDriftBound = 0.1;

struct OjaPcaState {
  DenseMatrix basis;  // N x Q
  GammaFadeMean mean;
  std::uint64_t steps_taken = 0;
  LearningRateSchedule schedule;
  std::uint64_t ortho_period = 1;
  double eps_ortho = 1e-8;
  bool track_mean = true;

  std::size_t input_dim() const noexcept { return basis.rows(); }
  std::size_t num_components() const noexcept { return basis.cols(); }
  /// The centering vector: mu, or zero before the first mean update.
  Vector center() const;

  friend bool operator==(const OjaPcaState&, const OjaPcaState&) = default;
};

struct OjaStepTrace {
  DenseMatrix projected;  // Y, B x Q
  DenseMatrix gram;       // G, Q x Q
  double delta_norm = 0.0;
  double eta_used = 0.0;
  /// ||CᵀC - I||_F after the additive update, before any re-orthonormalization.
  double drift = 0.0;
  bool reorthonormalized = false;
};

/// Random orthonormal basis from a seeded Gaussian matrix.
OjaPcaState init_state(std::size_t input_dim, std::size_t num_components, std::uint64_t seed,
                       const OjaConfig& config = {});

/// State around a caller-supplied basis (must be column-orthonormal within 1e-6).
OjaPcaState make_state(DenseMatrix basis, const OjaConfig& config = {});

Vector project(const OjaPcaState& state, std::span<const double> z);
Vector reconstruct(const OjaPcaState& state, std::span<const double> y);
/// C Cᵀ (z - mu) + mu
Vector quantize(const OjaPcaState& state, std::span<const double> z);

/// One minibatch update. Throws InputError on malformed batches and
/// NumericalError when a step that does not re-orthonormalize leaves the
/// basis beyond kDriftBound; the state is untouched when an exception escapes.
OjaStepTrace oja_step(OjaPcaState& state, const DenseMatrix& batch);

void reorthonormalize(OjaPcaState& state);

/// Per-component variance (1/M normalization) of Cᵀ(z - mean(data)).
Vector explained_variance(const OjaPcaState& state, const DenseMatrix& data);

/// Columns permuted so explained_variance is non-increasing (stable).
OjaPcaState sort_components(const OjaPcaState& state, const DenseMatrix& data);

/// First k columns.
OjaPcaState truncate(const OjaPcaState& state, std::size_t k);

}  // namespace opca
