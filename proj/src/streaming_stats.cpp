#include "opca/streaming_stats.hpp"

#include <cmath>
#include <string>

#include "opca/errors.hpp"

namespace opca {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) reject("gamma must lie in (0, 1), got " + std::to_string(gamma));
}

}  // namespace

GammaFadeMean::GammaFadeMean(std::size_t dimension, double gamma_) : mu(dimension, 0.0), gamma(gamma_) {
  check_gamma(gamma);
}

double rho(std::uint64_t n, double gamma) {
  check_gamma(gamma);
  // pow underflows to 0 for large n, leaving the limit 1/(1-gamma).
  return (1.0 - std::pow(gamma, static_cast<double>(n))) / (1.0 - gamma);
}

GammaFadeMean gamma_fade_update(const GammaFadeMean& state, std::span<const double> batch_mean) {
  check_gamma(state.gamma);
  if (batch_mean.size() != state.dimension()) {
    reject(InputErrorKind::dimension_mismatch, "gamma_fade_update: batch mean has dimension " +
                                                   std::to_string(batch_mean.size()) + ", state has " +
                                                   std::to_string(state.dimension()));
  }
  for (double x : batch_mean)
    if (!std::isfinite(x)) reject(InputErrorKind::non_finite, "gamma_fade_update: non-finite batch mean");

  GammaFadeMean next = state;
  next.step = state.step + 1;
  if (state.step == 0) {
    next.mu.assign(batch_mean.begin(), batch_mean.end());
    return next;
  }
  const double rho_prev = rho(state.step, state.gamma);
  const double rho_next = rho(next.step, state.gamma);
  const double w_new = 1.0 / rho_next;
  const double w_old = state.gamma * rho_prev / rho_next;
  for (std::size_t i = 0; i < next.mu.size(); ++i) next.mu[i] = w_new * batch_mean[i] + w_old * state.mu[i];
  return next;
}

Vector gamma_fade_direct(std::span<const Vector> batch_means, double gamma) {
  check_gamma(gamma);
  if (batch_means.empty()) reject("gamma_fade_direct: empty sequence");
  const std::size_t dim = batch_means.front().size();
  Vector num(dim, 0.0);
  double den = 0.0;
  double w = 1.0;
  // Newest first: weight gamma^k on the k-th most recent mean.
  for (auto it = batch_means.rbegin(); it != batch_means.rend(); ++it) {
    if (it->size() != dim) reject(InputErrorKind::dimension_mismatch, "gamma_fade_direct: ragged sequence");
    for (std::size_t i = 0; i < dim; ++i) num[i] += w * (*it)[i];
    den += w;
    w *= gamma;
  }
  for (double& x : num) x /= den;
  return num;
}

}  // namespace opca
