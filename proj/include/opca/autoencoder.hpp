#pragma once

// Dense encoder/decoder around the PCA bottleneck, with hand-written
// backpropagation and Adam. Gradients exist only for encoder and decoder
// parameters; the bottleneck is updated from forward activations.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "opca/bottleneck.hpp"
#include "opca/linalg.hpp"
#include "opca/tensor.hpp"

namespace opca {

enum class Activation : std::uint64_t { identity = 0, tanh = 1 };

struct DenseLayer {
  DenseMatrix weight;  // out x in
  Vector bias;         // out
  Activation activation = Activation::identity;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpStack {
  std::vector<DenseLayer> layers;

  /// Layers dims[0] -> dims[1] -> ... ; tanh on hidden layers, identity output.
  /// Weights ~ N(0, 1/fan_in), biases zero.
  static MlpStack create(std::span<const std::size_t> dims, std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_parameters() const;
  /// Throws InputError if consecutive layers do not chain or parameters are non-finite.
  void validate() const;

  friend bool operator==(const MlpStack&, const MlpStack&) = default;
};

/// Per-layer inputs and activated outputs retained for backprop.
struct MlpCache {
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> outputs;
};

struct MlpGradients {
  std::vector<DenseMatrix> weight;
  std::vector<Vector> bias;

  static MlpGradients zeros_like(const MlpStack& net);
};

/// Rows of x are samples.
DenseMatrix mlp_forward(const MlpStack& net, const DenseMatrix& x, MlpCache* cache = nullptr);
/// Accumulates parameter gradients into `grads` and returns dL/dx.
DenseMatrix mlp_backward(const MlpStack& net, const MlpCache& cache, const DenseMatrix& grad_out, MlpGradients& grads);

LatentTensor encoder_forward(const MlpStack& enc, const ImageBatch& x, const LatentShape& shape,
                             MlpCache* cache = nullptr);
/// Output is a real-valued image estimate; it is not clamped to [0, 1].
ImageBatch decoder_forward(const MlpStack& dec, const LatentTensor& h_hat, const ImageShape& shape,
                           MlpCache* cache = nullptr);

struct LossResult {
  double loss = 0.0;
  ImageBatch grad;  // dL/dx_hat
};

/// (1/B) Σ_b ||x_hat_b - x_b||², gradient 2 (x_hat - x) / B.
LossResult mse_loss(const ImageBatch& x_hat, const ImageBatch& x);

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Vector m;
  Vector v;
  std::uint64_t t = 0;

  friend bool operator==(const AdamMoments&, const AdamMoments&) = default;
};

/// Bias-corrected Adam step in place. Moments are sized lazily on first use.
void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 const AdamOptions& opts);

/// One moment pair per weight matrix and per bias vector.
struct MlpAdamState {
  std::vector<AdamMoments> weight;
  std::vector<AdamMoments> bias;

  friend bool operator==(const MlpAdamState&, const MlpAdamState&) = default;
};

void adam_update(MlpStack& net, const MlpGradients& grads, MlpAdamState& state, const AdamOptions& opts);

struct AutoencoderModel {
  ImageShape image;
  LatentShape latent;
  MlpStack encoder;
  MlpStack decoder;
  BottleneckLayout layout;
  MlpAdamState encoder_opt;
  MlpAdamState decoder_opt;

  /// encoder: image -> hidden (tanh) -> latent ; decoder: latent -> hidden (tanh) -> image.
  static AutoencoderModel create(const ImageShape& image, const LatentShape& latent, std::size_t hidden_units,
                                 const BottleneckConfig& bottleneck, std::uint64_t seed);

  friend bool operator==(const AutoencoderModel&, const AutoencoderModel&) = default;
};

struct ModelGradients {
  MlpGradients encoder;
  MlpGradients decoder;

  /// Every gradient tensor the optimizer sees, keyed by parameter name.
  std::vector<std::pair<std::string, std::span<const double>>> named() const;
};

struct ForwardPass {
  LatentTensor latent;
  LatentTensor quantized;
  ImageBatch reconstruction;
  MlpCache encoder_cache;
  MlpCache decoder_cache;
};

/// Encoder -> bottleneck -> decoder with the layout read-only.
ForwardPass model_forward(const AutoencoderModel& model, const ImageBatch& x);
ForwardPass model_forward(const AutoencoderModel& model, const BottleneckLayout& layout, const ImageBatch& x);

/// Loss and encoder/decoder gradients with the bottleneck frozen.
std::pair<double, ModelGradients> compute_gradients(const AutoencoderModel& model, const ImageBatch& x);

struct TrainOptions {
  AdamOptions adam;
  bool update_bottleneck = true;
  /// Refresh (C, mu) from the minibatch before quantizing it.
  bool update_before_forward = true;
};

struct TrainStepResult {
  double loss = 0.0;
  double drift = 0.0;
  double mean_delta_norm = 0.0;
  ModelGradients grads;
};

/// One optimization step. On any exception the model is left unchanged.
TrainStepResult train_step(AutoencoderModel& model, const ImageBatch& batch, const TrainOptions& opts);

/// Latents for a whole dataset, in chunks.
LatentTensor encode_all(const AutoencoderModel& model, const ImageBatch& images);

/// Reconstructions through `layout` (which may be sorted/truncated).
ImageBatch reconstruct_all(const AutoencoderModel& model, const BottleneckLayout& layout, const ImageBatch& images);

}  // namespace opca
