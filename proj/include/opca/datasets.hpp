#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "opca/linalg.hpp"
#include "opca/tensor.hpp"

namespace opca {

// ---------------------------------------------------------------------------
// Gaussian data with a known spectrum: z = U diag(sqrt(lambda)) e + m.

struct GaussianLowRankSpec {
  std::size_t dimension = 0;
  Vector spectrum;  // positive, non-increasing, length <= dimension
  Vector mean;      // empty means zero
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

struct LowRankDataset {
  DenseMatrix samples;  // count x dimension
  DenseMatrix basis;    // dimension x spectrum.size(), orthonormal
  Vector spectrum;
  Vector mean;

  /// U diag(lambda) Uᵀ
  DenseMatrix covariance() const;
};

LowRankDataset gen_gaussian_lowrank(const GaussianLowRankSpec& spec);

// ---------------------------------------------------------------------------
// Toy shapes: one anti-aliased disc or square per image, vertically centred.
// Generative factors are horizontal position, size and brightness.

enum class ToyShape { disc, rectangle };

struct ToyShapesSpec {
  std::size_t image_size = 16;
  std::size_t count = 64;
  std::uint64_t seed = 0;
  ToyShape shape = ToyShape::disc;
};

inline constexpr std::array<const char*, 3> kToyFactorNames{"x_position", "radius", "brightness"};

struct ToyFactors {
  double x_position = 0.0;  // centre column, pixels
  double radius = 0.0;      // pixels (half side for squares)
  double brightness = 0.0;  // peak intensity in [0, 1]
};

struct ToyShapesDataset {
  ImageBatch images;
  DenseMatrix factors;  // count x 3, columns ordered as kToyFactorNames
};

/// Single-channel size x size rendering with 4x4 supersampling.
Vector render_toy_shape(std::size_t size, ToyShape shape, const ToyFactors& factors);

ToyShapesDataset gen_toy_shapes(const ToyShapesSpec& spec);

// ---------------------------------------------------------------------------
// Binary PGM (P5).

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  Vector pixels;  // row-major, scaled to [0, 1]
};

GrayImage read_pgm(const std::filesystem::path& path);
/// Pixels are clamped to [0, 1] and rounded to maxval 255.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Every *.pgm in `dir`, lexicographic order, as a single-channel batch.
ImageBatch load_pgm_dir(const std::filesystem::path& dir);

}  // namespace opca
