#include "opca/metrics.hpp"

#include <cmath>
#include <vector>

#include "opca/errors.hpp"

namespace opca {

double bit_budget(const BitBudgetSpec& spec, bool ceil_per_token) {
  if (spec.tokens < 1) reject("bit_budget: tokens must be >= 1");
  const double n = static_cast<double>(spec.tokens);
  if (spec.kind == BitBudgetSpec::Kind::continuous) {
    if (spec.channels < 1 || spec.bits_per_value < 1) reject("bit_budget: channels and bits must be >= 1");
    return n * static_cast<double>(spec.channels) * static_cast<double>(spec.bits_per_value);
  }
  if (spec.codebook_size < 2) reject("bit_budget: codebook size must be >= 2");
  const double per_token = std::log2(static_cast<double>(spec.codebook_size));
  return n * (ceil_per_token ? std::ceil(per_token) : per_token);
}

double mean_squared_error(const ImageBatch& a, const ImageBatch& b) {
  if (!a.same_shape(b) || !a.consistent() || !b.consistent()) reject(InputErrorKind::dimension_mismatch, "mse: shape mismatch");
  if (a.values.empty()) reject("mse: empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return s / static_cast<double>(a.values.size());
}

double psnr(const ImageBatch& x_hat, const ImageBatch& x, double peak) {
  const double mse = mean_squared_error(x_hat, x);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim_plane(std::span<const double> a, std::span<const double> b, std::size_t height, std::size_t width,
                  double peak) {
  constexpr std::size_t w = kSsimWindow;
  if (a.size() != height * width || b.size() != height * width) reject(InputErrorKind::dimension_mismatch, "ssim: shape mismatch");
  if (height < w || width < w) reject("ssim: image smaller than the 8x8 window");

  // Summed-area tables of a, b, a², b², ab with a zero border row/column.
  const std::size_t sw = width + 1;
  std::vector<double> sa((height + 1) * sw, 0.0), sb(sa), saa(sa), sbb(sa), sab(sa);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double va = a[y * width + x];
      const double vb = b[y * width + x];
      const std::size_t i = (y + 1) * sw + (x + 1);
      const std::size_t up = y * sw + (x + 1);
      const std::size_t left = (y + 1) * sw + x;
      const std::size_t diag = y * sw + x;
      sa[i] = va + sa[up] + sa[left] - sa[diag];
      sb[i] = vb + sb[up] + sb[left] - sb[diag];
      saa[i] = va * va + saa[up] + saa[left] - saa[diag];
      sbb[i] = vb * vb + sbb[up] + sbb[left] - sbb[diag];
      sab[i] = va * vb + sab[up] + sab[left] - sab[diag];
    }
  }
  auto box = [&](const std::vector<double>& t, std::size_t y, std::size_t x) {
    return t[(y + w) * sw + (x + w)] - t[y * sw + (x + w)] - t[(y + w) * sw + x] + t[y * sw + x];
  };

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const double inv_n = 1.0 / static_cast<double>(w * w);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t y = 0; y + w <= height; ++y) {
    for (std::size_t x = 0; x + w <= width; ++x) {
      const double mu_a = box(sa, y, x) * inv_n;
      const double mu_b = box(sb, y, x) * inv_n;
      const double var_a = box(saa, y, x) * inv_n - mu_a * mu_a;
      const double var_b = box(sbb, y, x) * inv_n - mu_b * mu_b;
      const double cov = box(sab, y, x) * inv_n - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double ssim(const ImageBatch& x_hat, const ImageBatch& x, double peak) {
  if (!x_hat.same_shape(x) || !x.consistent() || !x_hat.consistent()) reject(InputErrorKind::dimension_mismatch, "ssim: shape mismatch");
  if (x.batch == 0 || x.channels == 0) reject("ssim: empty images");
  const std::size_t plane = x.spatial_size();
  double total = 0.0;
  for (std::size_t b = 0; b < x.batch; ++b) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      const std::size_t off = (b * x.channels + c) * plane;
      total += ssim_plane(std::span(x_hat.values).subspan(off, plane), std::span(x.values).subspan(off, plane),
                          x.height, x.width, peak);
    }
  }
  return total / static_cast<double>(x.batch * x.channels);
}

}  // namespace opca
