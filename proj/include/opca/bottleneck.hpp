#pragma once

// PCA bottleneck over a B x D x H' x W' latent tensor.
//
// single_vector: each sample is flattened to one N = D·H'·W' vector and
//   quantized by one shared state.
// multi_patch: every spatial position p owns an independent D-dimensional
//   state; h_(p) -> C_p C_pᵀ (h_(p) - mu_p) + mu_p.
//
// Bases and means are stop-gradient: they change only in bottleneck_update,
// which reads forward activations, and backward never produces gradients for
// them.

#include <cstdint>
#include <span>
#include <vector>

#include "opca/oja_pca.hpp"
#include "opca/tensor.hpp"

namespace opca {

enum class LayoutMode : std::uint64_t { single_vector = 0, multi_patch = 1 };
enum class BackwardMode : std::uint64_t { projector = 0, straight_through = 1 };

struct BottleneckConfig {
  LayoutMode mode = LayoutMode::single_vector;
  std::size_t num_components = 1;
  OjaConfig oja;
  BackwardMode backward = BackwardMode::projector;
  /// Position p is seeded with seed + p.
  std::uint64_t seed = 0;
};

class BottleneckLayout {
 public:
  BottleneckLayout() = default;
  BottleneckLayout(LayoutMode mode, LatentShape shape, std::vector<OjaPcaState> states,
                   BackwardMode backward = BackwardMode::projector);

  static BottleneckLayout create(const LatentShape& shape, const BottleneckConfig& config);

  LayoutMode mode() const noexcept { return mode_; }
  const LatentShape& shape() const noexcept { return shape_; }
  BackwardMode backward_mode() const noexcept { return backward_; }
  void set_backward_mode(BackwardMode m) noexcept { backward_ = m; }

  /// One state in single_vector mode, H'·W' in multi_patch mode.
  std::span<const OjaPcaState> states() const noexcept { return states_; }
  std::span<OjaPcaState> states() noexcept { return states_; }
  std::size_t num_components() const noexcept { return states_.empty() ? 0 : states_.front().num_components(); }
  /// Dimension of each quantized block.
  std::size_t block_dim() const noexcept;
  std::size_t num_blocks_per_sample() const noexcept { return states_.size(); }

  friend bool operator==(const BottleneckLayout&, const BottleneckLayout&) = default;

 private:
  LayoutMode mode_ = LayoutMode::single_vector;
  LatentShape shape_;
  std::vector<OjaPcaState> states_;
  BackwardMode backward_ = BackwardMode::projector;
};

struct BottleneckUpdateStats {
  double max_drift = 0.0;
  double mean_delta_norm = 0.0;
};

LatentTensor bottleneck_forward(const BottleneckLayout& layout, const LatentTensor& h);

BottleneckUpdateStats bottleneck_update(BottleneckLayout& layout, const LatentTensor& h);

/// Gradient w.r.t. the bottleneck input with C and mu held constant.
LatentTensor stop_gradient_backward(const BottleneckLayout& layout, const LatentTensor& grad_out);

/// Rows are the vectors quantized by state `block`, one per sample.
DenseMatrix gather_block(const BottleneckLayout& layout, const LatentTensor& h, std::size_t block);

BottleneckLayout sort_components(const BottleneckLayout& layout, const LatentTensor& data);
BottleneckLayout truncate(const BottleneckLayout& layout, std::size_t k);

/// Largest ||CᵀC - I||_F over all states.
double max_orthonormality_defect(const BottleneckLayout& layout);

}  // namespace opca
