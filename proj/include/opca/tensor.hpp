#pragma once

#include <cstddef>
#include <span>

#include "opca/linalg.hpp"

namespace opca {

/// Dense B x C x H x W tensor, NCHW order. The tag keeps images and latents
/// from being mixed up at call sites.
template <class Tag>
struct Tensor4 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Vector values;

  Tensor4() = default;
  Tensor4(std::size_t b, std::size_t c, std::size_t h, std::size_t w)
      : batch(b), channels(c), height(h), width(w), values(b * c * h * w, 0.0) {}

  std::size_t sample_size() const noexcept { return channels * height * width; }
  std::size_t spatial_size() const noexcept { return height * width; }

  std::span<double> sample(std::size_t b) { return {values.data() + b * sample_size(), sample_size()}; }
  std::span<const double> sample(std::size_t b) const { return {values.data() + b * sample_size(), sample_size()}; }

  double& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return values[((b * channels + c) * height + y) * width + x];
  }
  double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return values[((b * channels + c) * height + y) * width + x];
  }

  bool same_shape(const Tensor4& o) const noexcept {
    return batch == o.batch && channels == o.channels && height == o.height && width == o.width;
  }
  bool consistent() const noexcept { return values.size() == batch * sample_size(); }

  /// B x (C·H·W) matrix view copy, one flattened sample per row.
  DenseMatrix as_rows() const { return DenseMatrix(batch, sample_size(), values); }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;
};

struct ImageTag;
struct LatentTag;

/// Images with pixels nominally in [0, 1]; decoder outputs reuse the type
/// but may leave that range.
using ImageBatch = Tensor4<ImageTag>;
using LatentTensor = Tensor4<LatentTag>;

struct LatentShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  std::size_t positions() const noexcept { return height * width; }
  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Rows [first, first + count) of `images`.
ImageBatch slice(const ImageBatch& images, std::size_t first, std::size_t count);
/// Samples picked by index, in the given order.
ImageBatch gather(const ImageBatch& images, std::span<const std::size_t> indices);

}  // namespace opca
