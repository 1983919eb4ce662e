#include "opca/autoencoder.hpp"

#include <cmath>
#include <random>

#include "opca/errors.hpp"

namespace opca {

namespace {

void apply_activation(Activation act, DenseMatrix& m) {
  if (act == Activation::tanh)
    for (double& x : m.data()) x = std::tanh(x);
}

}  // namespace

MlpStack MlpStack::create(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) reject("MlpStack::create: need at least input and output dimensions");
  std::mt19937_64 rng(seed);
  MlpStack net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    if (in == 0 || out == 0) reject("MlpStack::create: zero-width layer");
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    DenseLayer layer;
    layer.weight = DenseMatrix(out, in);
    for (double& w : layer.weight.data()) w = normal(rng);
    layer.bias.assign(out, 0.0);
    layer.activation = l + 2 == dims.size() ? Activation::identity : Activation::tanh;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::size_t MlpStack::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
std::size_t MlpStack::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

std::size_t MlpStack::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpStack::validate() const {
  if (layers.empty()) reject("MlpStack: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weight.rows()) reject(InputErrorKind::dimension_mismatch, "MlpStack: bias size mismatch");
    if (l > 0 && layer.weight.cols() != layers[l - 1].weight.rows()) {
      reject(InputErrorKind::dimension_mismatch, "MlpStack: layer " + std::to_string(l) + " does not chain");
    }
    if (!layer.weight.all_finite()) reject(InputErrorKind::non_finite, "MlpStack: non-finite weight");
    for (double b : layer.bias)
      if (!std::isfinite(b)) reject(InputErrorKind::non_finite, "MlpStack: non-finite bias");
  }
}

MlpGradients MlpGradients::zeros_like(const MlpStack& net) {
  MlpGradients g;
  for (const auto& l : net.layers) {
    g.weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

DenseMatrix mlp_forward(const MlpStack& net, const DenseMatrix& x, MlpCache* cache) {
  if (x.cols() != net.input_dim()) {
    reject(InputErrorKind::dimension_mismatch, "mlp_forward: input width " + std::to_string(x.cols()) +
                                                   ", network expects " + std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  DenseMatrix a = x;
  for (const auto& layer : net.layers) {
    DenseMatrix z(a.rows(), layer.weight.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
      auto in = a.row(r);
      auto out = z.row(r);
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) out[o] = dot(layer.weight.row(o), in) + layer.bias[o];
    }
    apply_activation(layer.activation, z);
    if (cache) cache->inputs.push_back(std::move(a));
    a = std::move(z);
    if (cache) cache->outputs.push_back(a);
  }
  return a;
}

DenseMatrix mlp_backward(const MlpStack& net, const MlpCache& cache, const DenseMatrix& grad_out, MlpGradients& grads) {
  if (cache.inputs.size() != net.layers.size()) reject("mlp_backward: cache does not match network");
  DenseMatrix g = grad_out;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const DenseLayer& layer = net.layers[li];
    const DenseMatrix& out = cache.outputs[li];
    const DenseMatrix& in = cache.inputs[li];
    if (g.rows() != out.rows() || g.cols() != out.cols()) {
      reject(InputErrorKind::dimension_mismatch, "mlp_backward: gradient shape mismatch");
    }
    if (layer.activation == Activation::tanh) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = out.data()[i];
        g.data()[i] *= 1.0 - y * y;
      }
    }
    // dW += gᵀ in ; db += Σ_rows g ; d_in = g W
    grads.weight[li] += matmul_tn(g, in);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto row = g.row(r);
      for (std::size_t o = 0; o < row.size(); ++o) grads.bias[li][o] += row[o];
    }
    g = matmul(g, layer.weight);
  }
  return g;
}

LatentTensor encoder_forward(const MlpStack& enc, const ImageBatch& x, const LatentShape& shape, MlpCache* cache) {
  if (!x.consistent() || x.sample_size() != enc.input_dim()) {
    reject(InputErrorKind::dimension_mismatch, "encoder_forward: image size does not match encoder input");
  }
  if (enc.output_dim() != shape.size()) {
    reject(InputErrorKind::dimension_mismatch, "encoder_forward: encoder output does not match latent shape");
  }
  const DenseMatrix h = mlp_forward(enc, x.as_rows(), cache);
  LatentTensor out(x.batch, shape.channels, shape.height, shape.width);
  out.values = h.entries();
  return out;
}

ImageBatch decoder_forward(const MlpStack& dec, const LatentTensor& h_hat, const ImageShape& shape, MlpCache* cache) {
  if (!h_hat.consistent() || h_hat.sample_size() != dec.input_dim()) {
    reject(InputErrorKind::dimension_mismatch, "decoder_forward: latent size does not match decoder input");
  }
  if (dec.output_dim() != shape.size()) {
    reject(InputErrorKind::dimension_mismatch, "decoder_forward: decoder output does not match image shape");
  }
  const DenseMatrix x = mlp_forward(dec, h_hat.as_rows(), cache);
  ImageBatch out(h_hat.batch, shape.channels, shape.height, shape.width);
  out.values = x.entries();
  return out;
}

LossResult mse_loss(const ImageBatch& x_hat, const ImageBatch& x) {
  if (!x_hat.same_shape(x) || !x.consistent() || !x_hat.consistent()) {
    reject(InputErrorKind::dimension_mismatch, "mse_loss: shape mismatch");
  }
  if (x.batch == 0) reject("mse_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(x.batch);
  LossResult r{0.0, ImageBatch(x.batch, x.channels, x.height, x.width)};
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double d = x_hat.values[i] - x.values[i];
    r.loss += d * d;
    r.grad.values[i] = 2.0 * d * inv_b;
  }
  r.loss *= inv_b;
  return r;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 const AdamOptions& opts) {
  if (params.size() != grads.size()) reject(InputErrorKind::dimension_mismatch, "adam_update: params/grads size mismatch");
  if (moments.m.empty() && moments.v.empty()) {
    moments.m.assign(params.size(), 0.0);
    moments.v.assign(params.size(), 0.0);
  }
  if (moments.m.size() != params.size() || moments.v.size() != params.size()) {
    reject(InputErrorKind::dimension_mismatch, "adam_update: moment size mismatch");
  }
  moments.t += 1;
  const double t = static_cast<double>(moments.t);
  const double c1 = 1.0 - std::pow(opts.beta1, t);
  const double c2 = 1.0 - std::pow(opts.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    moments.m[i] = opts.beta1 * moments.m[i] + (1.0 - opts.beta1) * g;
    moments.v[i] = opts.beta2 * moments.v[i] + (1.0 - opts.beta2) * g * g;
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    params[i] -= opts.learning_rate * m_hat / (std::sqrt(v_hat) + opts.epsilon);
  }
}

void adam_update(MlpStack& net, const MlpGradients& grads, MlpAdamState& state, const AdamOptions& opts) {
  if (grads.weight.size() != net.layers.size() || grads.bias.size() != net.layers.size()) {
    reject(InputErrorKind::dimension_mismatch, "adam_update: gradient layer count mismatch");
  }
  state.weight.resize(net.layers.size());
  state.bias.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    adam_update(net.layers[l].weight.data(), grads.weight[l].data(), state.weight[l], opts);
    adam_update(net.layers[l].bias, grads.bias[l], state.bias[l], opts);
  }
}

AutoencoderModel AutoencoderModel::create(const ImageShape& image, const LatentShape& latent, std::size_t hidden_units,
                                          const BottleneckConfig& bottleneck, std::uint64_t seed) {
  if (hidden_units == 0) reject("AutoencoderModel: hidden_units must be positive");
  AutoencoderModel m;
  m.image = image;
  m.latent = latent;
  const std::size_t enc_dims[] = {image.size(), hidden_units, latent.size()};
  const std::size_t dec_dims[] = {latent.size(), hidden_units, image.size()};
  m.encoder = MlpStack::create(enc_dims, seed);
  m.decoder = MlpStack::create(dec_dims, seed + 1);
  m.layout = BottleneckLayout::create(latent, bottleneck);
  return m;
}

std::vector<std::pair<std::string, std::span<const double>>> ModelGradients::named() const {
  std::vector<std::pair<std::string, std::span<const double>>> out;
  auto add = [&](const std::string& prefix, const MlpGradients& g) {
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
      out.emplace_back(prefix + ".layer" + std::to_string(l) + ".weight", g.weight[l].data());
      out.emplace_back(prefix + ".layer" + std::to_string(l) + ".bias", std::span<const double>(g.bias[l]));
    }
  };
  add("encoder", encoder);
  add("decoder", decoder);
  return out;
}

ForwardPass model_forward(const AutoencoderModel& model, const BottleneckLayout& layout, const ImageBatch& x) {
  ForwardPass f;
  f.latent = encoder_forward(model.encoder, x, model.latent, &f.encoder_cache);
  f.quantized = bottleneck_forward(layout, f.latent);
  f.reconstruction = decoder_forward(model.decoder, f.quantized, model.image, &f.decoder_cache);
  return f;
}

ForwardPass model_forward(const AutoencoderModel& model, const ImageBatch& x) {
  return model_forward(model, model.layout, x);
}

namespace {

std::pair<double, ModelGradients> backprop(const AutoencoderModel& model, const BottleneckLayout& layout,
                                           const ForwardPass& f, const ImageBatch& x) {
  const LossResult loss = mse_loss(f.reconstruction, x);
  ModelGradients grads{MlpGradients::zeros_like(model.encoder), MlpGradients::zeros_like(model.decoder)};

  const DenseMatrix grad_xhat(loss.grad.batch, loss.grad.sample_size(), loss.grad.values);
  const DenseMatrix grad_hhat = mlp_backward(model.decoder, f.decoder_cache, grad_xhat, grads.decoder);

  LatentTensor g_hhat(f.quantized.batch, f.quantized.channels, f.quantized.height, f.quantized.width);
  g_hhat.values = grad_hhat.entries();
  const LatentTensor g_h = stop_gradient_backward(layout, g_hhat);

  mlp_backward(model.encoder, f.encoder_cache, g_h.as_rows(), grads.encoder);
  return {loss.loss, std::move(grads)};
}

}  // namespace

std::pair<double, ModelGradients> compute_gradients(const AutoencoderModel& model, const ImageBatch& x) {
  const ForwardPass f = model_forward(model, x);
  return backprop(model, model.layout, f, x);
}

TrainStepResult train_step(AutoencoderModel& model, const ImageBatch& batch, const TrainOptions& opts) {
  if (batch.batch == 0) reject("train_step: empty batch");
  AutoencoderModel next = model;
  TrainStepResult result;

  ForwardPass f;
  f.latent = encoder_forward(next.encoder, batch, next.latent, &f.encoder_cache);
  if (opts.update_bottleneck && opts.update_before_forward) {
    const BottleneckUpdateStats st = bottleneck_update(next.layout, f.latent);
    result.drift = st.max_drift;
    result.mean_delta_norm = st.mean_delta_norm;
  }
  f.quantized = bottleneck_forward(next.layout, f.latent);
  f.reconstruction = decoder_forward(next.decoder, f.quantized, next.image, &f.decoder_cache);

  auto [loss, grads] = backprop(next, next.layout, f, batch);
  if (!std::isfinite(loss)) throw NumericalError("train_step: non-finite loss");
  result.loss = loss;

  if (opts.update_bottleneck && !opts.update_before_forward) {
    const BottleneckUpdateStats st = bottleneck_update(next.layout, f.latent);
    result.drift = st.max_drift;
    result.mean_delta_norm = st.mean_delta_norm;
  }

  adam_update(next.encoder, grads.encoder, next.encoder_opt, opts.adam);
  adam_update(next.decoder, grads.decoder, next.decoder_opt, opts.adam);
  result.grads = std::move(grads);
  model = std::move(next);
  return result;
}

LatentTensor encode_all(const AutoencoderModel& model, const ImageBatch& images) {
  return encoder_forward(model.encoder, images, model.latent);
}

ImageBatch reconstruct_all(const AutoencoderModel& model, const BottleneckLayout& layout, const ImageBatch& images) {
  return model_forward(model, layout, images).reconstruction;
}

}  // namespace opca
