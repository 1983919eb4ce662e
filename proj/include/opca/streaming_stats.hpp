#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opca/linalg.hpp"

namespace opca {

/// Normalized geometric-fade running mean over batch means:
///   mu_n = sum_k gamma^k zbar_{n-k} / sum_k gamma^k
/// At step 0 the mean is the zero vector and must not be used for centering.
struct GammaFadeMean {
  Vector mu;
  double gamma = 0.99;
  std::uint64_t step = 0;

  GammaFadeMean() = default;
  GammaFadeMean(std::size_t dimension, double gamma);

  std::size_t dimension() const noexcept { return mu.size(); }
  bool usable() const noexcept { return step > 0; }

  friend bool operator==(const GammaFadeMean&, const GammaFadeMean&) = default;
};

/// (1 - gamma^n) / (1 - gamma), evaluated in closed form.
double rho(std::uint64_t n, double gamma);

GammaFadeMean gamma_fade_update(const GammaFadeMean& state, std::span<const double> batch_mean);

/// Explicit weighted sum over the whole history (oldest first); reference for
/// gamma_fade_update.
Vector gamma_fade_direct(std::span<const Vector> batch_means, double gamma);

}  // namespace opca
