#include "opca/bottleneck.hpp"

#include <algorithm>
#include <string>

#include "opca/errors.hpp"

namespace opca {

namespace {

void check_shape(const BottleneckLayout& layout, const LatentTensor& h, const char* op) {
  const LatentShape& s = layout.shape();
  if (!h.consistent() || h.channels != s.channels || h.height != s.height || h.width != s.width) {
    reject(InputErrorKind::dimension_mismatch,
           std::string(op) + ": latent " + std::to_string(h.channels) + "x" + std::to_string(h.height) + "x" +
               std::to_string(h.width) + " does not match layout " + std::to_string(s.channels) + "x" +
               std::to_string(s.height) + "x" + std::to_string(s.width));
  }
}

// Element offsets of block `block` of sample `b` inside h.values.
struct BlockIndexer {
  LayoutMode mode;
  std::size_t sample_size;
  std::size_t positions;
  std::size_t dim;

  std::size_t offset(std::size_t b, std::size_t block, std::size_t i) const {
    if (mode == LayoutMode::single_vector) return b * sample_size + i;
    return b * sample_size + i * positions + block;
  }
};

BlockIndexer indexer(const BottleneckLayout& layout) {
  const LatentShape& s = layout.shape();
  return {layout.mode(), s.size(), s.positions(), layout.block_dim()};
}

// Apply fn(state, block_vector) -> block_vector to every block of every sample.
template <class Fn>
LatentTensor map_blocks(const BottleneckLayout& layout, const LatentTensor& in, Fn&& fn) {
  const BlockIndexer ix = indexer(layout);
  LatentTensor out = in;
  Vector block(ix.dim);
  for (std::size_t b = 0; b < in.batch; ++b) {
    for (std::size_t k = 0; k < layout.states().size(); ++k) {
      for (std::size_t i = 0; i < ix.dim; ++i) block[i] = in.values[ix.offset(b, k, i)];
      const Vector mapped = fn(layout.states()[k], block);
      for (std::size_t i = 0; i < ix.dim; ++i) out.values[ix.offset(b, k, i)] = mapped[i];
    }
  }
  return out;
}

}  // namespace

BottleneckLayout::BottleneckLayout(LayoutMode mode, LatentShape shape, std::vector<OjaPcaState> states,
                                   BackwardMode backward)
    : mode_(mode), shape_(shape), states_(std::move(states)), backward_(backward) {
  const std::size_t expected_states = mode_ == LayoutMode::single_vector ? 1 : shape_.positions();
  const std::size_t expected_dim = mode_ == LayoutMode::single_vector ? shape_.size() : shape_.channels;
  if (states_.size() != expected_states) {
    reject(InputErrorKind::dimension_mismatch, "BottleneckLayout: expected " + std::to_string(expected_states) +
                                                   " states, got " + std::to_string(states_.size()));
  }
  for (const auto& st : states_) {
    if (st.input_dim() != expected_dim) reject(InputErrorKind::dimension_mismatch, "BottleneckLayout: state dimension mismatch");
    if (st.num_components() != states_.front().num_components()) {
      reject(InputErrorKind::dimension_mismatch, "BottleneckLayout: patch states must share Q");
    }
  }
}

BottleneckLayout BottleneckLayout::create(const LatentShape& shape, const BottleneckConfig& config) {
  if (shape.size() == 0) reject("BottleneckLayout: empty latent shape");
  std::vector<OjaPcaState> states;
  if (config.mode == LayoutMode::single_vector) {
    states.push_back(init_state(shape.size(), config.num_components, config.seed, config.oja));
  } else {
    states.reserve(shape.positions());
    for (std::size_t p = 0; p < shape.positions(); ++p) {
      states.push_back(init_state(shape.channels, config.num_components, config.seed + p, config.oja));
    }
  }
  return BottleneckLayout(config.mode, shape, std::move(states), config.backward);
}

std::size_t BottleneckLayout::block_dim() const noexcept {
  return mode_ == LayoutMode::single_vector ? shape_.size() : shape_.channels;
}

LatentTensor bottleneck_forward(const BottleneckLayout& layout, const LatentTensor& h) {
  check_shape(layout, h, "bottleneck_forward");
  return map_blocks(layout, h, [](const OjaPcaState& s, const Vector& z) { return quantize(s, z); });
}

DenseMatrix gather_block(const BottleneckLayout& layout, const LatentTensor& h, std::size_t block) {
  check_shape(layout, h, "gather_block");
  if (block >= layout.states().size()) reject("gather_block: block index out of range");
  const BlockIndexer ix = indexer(layout);
  DenseMatrix rows(h.batch, ix.dim);
  for (std::size_t b = 0; b < h.batch; ++b)
    for (std::size_t i = 0; i < ix.dim; ++i) rows(b, i) = h.values[ix.offset(b, block, i)];
  return rows;
}

BottleneckUpdateStats bottleneck_update(BottleneckLayout& layout, const LatentTensor& h) {
  check_shape(layout, h, "bottleneck_update");
  if (h.batch == 0) reject("bottleneck_update: empty batch");
  // Commit only once every position has been updated successfully.
  std::vector<OjaPcaState> next(layout.states().begin(), layout.states().end());
  BottleneckUpdateStats stats;
  for (std::size_t k = 0; k < next.size(); ++k) {
    const OjaStepTrace trace = oja_step(next[k], gather_block(layout, h, k));
    stats.max_drift = std::max(stats.max_drift, trace.drift);
    stats.mean_delta_norm += trace.delta_norm;
  }
  stats.mean_delta_norm /= static_cast<double>(next.size());
  std::copy(next.begin(), next.end(), layout.states().begin());
  return stats;
}

LatentTensor stop_gradient_backward(const BottleneckLayout& layout, const LatentTensor& grad_out) {
  check_shape(layout, grad_out, "stop_gradient_backward");
  if (layout.backward_mode() == BackwardMode::straight_through) return grad_out;
  // d/dh [C Cᵀ (h - mu) + mu] = C Cᵀ, symmetric, so the adjoint is C Cᵀ as well.
  return map_blocks(layout, grad_out,
                    [](const OjaPcaState& s, const Vector& g) { return matvec(s.basis, matvec_t(s.basis, g)); });
}

BottleneckLayout sort_components(const BottleneckLayout& layout, const LatentTensor& data) {
  std::vector<OjaPcaState> states;
  for (std::size_t k = 0; k < layout.states().size(); ++k) {
    states.push_back(sort_components(layout.states()[k], gather_block(layout, data, k)));
  }
  return BottleneckLayout(layout.mode(), layout.shape(), std::move(states), layout.backward_mode());
}

BottleneckLayout truncate(const BottleneckLayout& layout, std::size_t k) {
  std::vector<OjaPcaState> states;
  for (const auto& s : layout.states()) states.push_back(truncate(s, k));
  return BottleneckLayout(layout.mode(), layout.shape(), std::move(states), layout.backward_mode());
}

double max_orthonormality_defect(const BottleneckLayout& layout) {
  double worst = 0.0;
  for (const auto& s : layout.states()) worst = std::max(worst, orthonormality_defect(s.basis));
  return worst;
}

}  // namespace opca
