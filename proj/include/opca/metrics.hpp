#pragma once

#include <cstdint>
#include <limits>

#include "opca/tensor.hpp"

namespace opca {

/// Storage cost of one image's latent.
///   continuous: tokens · channels · bits_per_value
///   discrete:   tokens · log2(codebook_size)
struct BitBudgetSpec {
  enum class Kind { continuous, discrete };

  Kind kind = Kind::continuous;
  std::uint64_t tokens = 1;
  std::uint64_t channels = 1;         // continuous only
  std::uint64_t bits_per_value = 32;  // continuous only
  std::uint64_t codebook_size = 2;    // discrete only

  static BitBudgetSpec continuous(std::uint64_t tokens, std::uint64_t channels, std::uint64_t bits = 32) {
    return {Kind::continuous, tokens, channels, bits, 2};
  }
  static BitBudgetSpec discrete(std::uint64_t tokens, std::uint64_t codebook_size) {
    return {Kind::discrete, tokens, 1, 32, codebook_size};
  }
};

/// Discrete budgets are real-valued unless `ceil_per_token`, which charges
/// ceil(log2 K) bits per token.
double bit_budget(const BitBudgetSpec& spec, bool ceil_per_token = false);

/// Returned by psnr for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

double mean_squared_error(const ImageBatch& a, const ImageBatch& b);

/// 10 log10(peak² / MSE) over all pixels.
double psnr(const ImageBatch& x_hat, const ImageBatch& x, double peak = 1.0);

inline constexpr std::size_t kSsimWindow = 8;

/// Mean SSIM over every 8x8 window (stride 1, uniform weights, population
/// moments), averaged over channels and images.
double ssim(const ImageBatch& x_hat, const ImageBatch& x, double peak = 1.0);

/// Single-channel SSIM of two row-major height x width planes.
double ssim_plane(std::span<const double> a, std::span<const double> b, std::size_t height, std::size_t width,
                  double peak = 1.0);

}  // namespace opca
