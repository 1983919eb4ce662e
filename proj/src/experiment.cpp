#include "opca/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "opca/errors.hpp"

namespace opca {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) reject(InputErrorKind::io_failure, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) reject(InputErrorKind::io_failure, "cannot write " + path.string());
  out << text;
  if (!out) reject(InputErrorKind::io_failure, "write failed for " + path.string());
}

std::string eval_csv_row(const EvalRow& r) {
  return fmt::format("{},{},{},{},{}", r.k, csv_real(r.bits), csv_real(r.mse), csv_real(r.psnr), csv_real(r.ssim));
}

void clamp01(Vector& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

// Channel-averaged plane of sample b.
Vector gray_plane(const ImageBatch& images, std::size_t b) {
  Vector out(images.spatial_size(), 0.0);
  for (std::size_t c = 0; c < images.channels; ++c)
    for (std::size_t y = 0; y < images.height; ++y)
      for (std::size_t x = 0; x < images.width; ++x) out[y * images.width + x] += images.at(b, c, y, x);
  for (double& v : out) v /= static_cast<double>(images.channels);
  return out;
}

void blit(GrayImage& dst, const Vector& plane, std::size_t h, std::size_t w, std::size_t top, std::size_t left) {
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) dst.pixels[(top + y) * dst.width + left + x] = plane[y * w + x];
}

Checkpoint load_for(const ExperimentConfig& config) { return load_checkpoint(config.checkpoint_path()); }

void check_image_shape(const AutoencoderModel& model, const ImageBatch& images) {
  if (images.channels != model.image.channels || images.height != model.image.height ||
      images.width != model.image.width) {
    reject(InputErrorKind::dimension_mismatch,
           fmt::format("dataset images are {}x{}x{} but the checkpoint expects {}x{}x{}", images.channels,
                       images.height, images.width, model.image.channels, model.image.height, model.image.width));
  }
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::string csv_real(double x) { return fmt::format("{:.17g}", x); }

LoadedData load_dataset(const ExperimentConfig& config) {
  LoadedData out;
  if (config.dataset == DatasetKind::pgm_dir) {
    out.images = load_pgm_dir(config.data_dir);
    return out;
  }
  ToyShapesSpec spec;
  spec.image_size = config.image_size;
  spec.count = config.num_images;
  spec.seed = config.data_seed;
  spec.shape = config.shape;
  ToyShapesDataset ds = gen_toy_shapes(spec);
  out.images = std::move(ds.images);
  out.factors = std::move(ds.factors);
  return out;
}

AutoencoderModel create_model(const ExperimentConfig& config, const ImageShape& image) {
  return AutoencoderModel::create(image, config.latent_shape(), config.hidden_units, config.bottleneck_config(),
                                  config.seed);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainReport cmd_train(const ExperimentConfig& config) {
  config.validate();
  const LoadedData data = load_dataset(config);
  const ImageBatch& images = data.images;
  const ImageShape shape{images.channels, images.height, images.width};

  TrainReport report;
  report.checkpoint.model = create_model(config, shape);
  report.checkpoint.rng_seed = config.seed;
  report.checkpoint_path = config.checkpoint_path();
  report.log_path = fs::path(config.output_dir) / "train_log.csv";
  ensure_dir(config.output_dir);
  if (report.checkpoint_path.has_parent_path()) ensure_dir(report.checkpoint_path.parent_path());
  write_text(fs::path(config.output_dir) / "config.txt", to_text(config));

  const TrainOptions opts = config.train_options();
  std::string csv = "step,loss,drift,mean_delta_norm\n";
  Checkpoint& ckpt = report.checkpoint;
  for (std::uint64_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(config.seed, epoch, images.batch);
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, order.size() - first);
      const ImageBatch batch = gather(images, std::span(order).subspan(first, count));
      const TrainStepResult r = train_step(ckpt.model, batch, opts);
      const TrainLogRow row{ckpt.step, r.loss, r.drift, r.mean_delta_norm};
      csv += fmt::format("{},{},{},{}\n", row.step, csv_real(row.loss), csv_real(row.drift),
                         csv_real(row.mean_delta_norm));
      report.log.push_back(row);
      ++ckpt.step;
    }
    ckpt.epochs_completed = epoch + 1;
    save_checkpoint(report.checkpoint_path, ckpt);
    write_text(report.log_path, csv);
  }
  return report;
}

BottleneckLayout sorted_layout(const AutoencoderModel& model, const ImageBatch& images) {
  return sort_components(model.layout, encode_all(model, images));
}

std::vector<EvalRow> evaluate_truncations(const AutoencoderModel& model, const ImageBatch& images,
                                          const std::vector<std::size_t>& ks, std::uint64_t bits_per_value) {
  check_image_shape(model, images);
  const std::size_t q = model.layout.num_components();
  for (std::size_t k : ks) {
    if (k == 0 || k > q) reject(fmt::format("k must lie in [1, {}], got {}", q, k));
  }
  const BottleneckLayout sorted = sorted_layout(model, images);
  std::vector<EvalRow> rows;
  for (std::size_t k : ks) {
    const ImageBatch rec = reconstruct_all(model, truncate(sorted, k), images);
    EvalRow row;
    row.k = k;
    row.bits = bit_budget(BitBudgetSpec::continuous(sorted.num_blocks_per_sample(), k, bits_per_value));
    row.mse = mean_squared_error(rec, images);
    row.psnr = psnr(rec, images);
    row.ssim = ssim(rec, images);
    rows.push_back(row);
  }
  return rows;
}

std::vector<EvalRow> cmd_eval(const ExperimentConfig& config) {
  config.validate();
  const Checkpoint ckpt = load_for(config);
  const LoadedData data = load_dataset(config);
  std::vector<std::size_t> ks(config.eval_k.begin(), config.eval_k.end());
  if (ks.empty()) ks.push_back(ckpt.model.layout.num_components());
  const auto rows = evaluate_truncations(ckpt.model, data.images, ks, config.bits_per_value);

  std::string csv = "k,bits,mse,psnr,ssim\n";
  for (const auto& r : rows) csv += eval_csv_row(r) + "\n";
  ensure_dir(config.output_dir);
  write_text(fs::path(config.output_dir) / "eval.csv", csv);
  return rows;
}

std::size_t components_for_fraction(double fraction, std::size_t q) {
  if (!(fraction > 0.0 && fraction <= 1.0)) reject("fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(q)));
  return std::clamp<std::size_t>(k, 1, q);
}

GrayImage comparison_grid(const ImageBatch& originals, const ImageBatch& reconstructions, std::size_t columns) {
  if (!originals.same_shape(reconstructions)) reject(InputErrorKind::dimension_mismatch, "comparison_grid: shape mismatch");
  if (columns == 0) reject("comparison_grid: need at least one column");
  const std::size_t h = originals.height;
  const std::size_t w = originals.width;
  GrayImage grid;
  grid.height = 2 * (h + kGridGap);
  grid.width = columns * (w + kGridGap);
  grid.pixels.assign(grid.height * grid.width, 1.0);
  for (std::size_t c = 0; c < std::min(columns, originals.batch); ++c) {
    blit(grid, gray_plane(originals, c), h, w, 0, c * (w + kGridGap));
    blit(grid, gray_plane(reconstructions, c), h, w, h + kGridGap, c * (w + kGridGap));
  }
  return grid;
}

std::vector<ScalingRow> cmd_scaling(const ExperimentConfig& config) {
  config.validate();
  if (config.fractions.empty()) reject("scaling: empty fraction list");
  const Checkpoint ckpt = load_for(config);
  const LoadedData data = load_dataset(config);
  const AutoencoderModel& model = ckpt.model;
  check_image_shape(model, data.images);
  const std::size_t q = model.layout.num_components();

  std::vector<std::size_t> ks;
  for (double f : config.fractions) ks.push_back(components_for_fraction(f, q));
  const auto evals = evaluate_truncations(model, data.images, ks, config.bits_per_value);

  ensure_dir(config.output_dir);
  const BottleneckLayout sorted = sorted_layout(model, data.images);
  const std::size_t shown = std::min<std::size_t>(config.grid_columns, data.images.batch);
  const ImageBatch originals = slice(data.images, 0, shown);

  std::vector<ScalingRow> rows;
  std::string csv = "fraction,k,bits,mse,psnr,ssim,grid\n";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    ScalingRow row;
    row.fraction = config.fractions[i];
    row.eval = evals[i];
    row.grid_path = fs::path(config.output_dir) / fmt::format("scaling_grid_{}.pgm", i);
    const ImageBatch rec = reconstruct_all(model, truncate(sorted, ks[i]), originals);
    write_pgm(row.grid_path, comparison_grid(originals, rec, config.grid_columns));
    csv += fmt::format("{},{},{}\n", csv_real(row.fraction), eval_csv_row(row.eval), row.grid_path.filename().string());
    rows.push_back(std::move(row));
  }
  write_text(fs::path(config.output_dir) / "scaling.csv", csv);
  return rows;
}

FrameStatistics frame_statistics(std::span<const double> pixels, std::size_t height, std::size_t width) {
  if (pixels.size() != height * width || pixels.empty()) reject(InputErrorKind::dimension_mismatch, "frame_statistics: bad frame size");
  Vector p(pixels.begin(), pixels.end());
  clamp01(p);
  FrameStatistics s;
  double mass = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double v = p[y * width + x];
      mass += v;
      mx += v * (static_cast<double>(x) + 0.5);
      my += v * (static_cast<double>(y) + 0.5);
    }
  s.mean_intensity = mass / static_cast<double>(p.size());
  if (mass <= 0.0) return s;
  mx /= mass;
  my /= mass;
  s.centroid_x = mx;
  double second = 0.0;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - mx;
      const double dy = static_cast<double>(y) + 0.5 - my;
      second += p[y * width + x] * (dx * dx + dy * dy);
    }
  s.spread = std::sqrt(second / mass);
  return s;
}

double statistic_for_factor(const FrameStatistics& s, std::size_t factor) {
  switch (factor) {
    case 0: return s.centroid_x;
    case 1: return s.spread;
    case 2: return s.mean_intensity;
  }
  reject("statistic_for_factor: factor index out of range");
}

Traversal traverse_component(const AutoencoderModel& model, const BottleneckLayout& layout,
                             const ImageBatch& reference, const ImageBatch& image, std::size_t q, double lo,
                             double hi, std::size_t steps) {
  if (layout.mode() != LayoutMode::single_vector) {
    reject("traverse: only single_vector checkpoints have a global latent to traverse");
  }
  if (q >= layout.num_components()) {
    reject(fmt::format("traverse: component {} out of range (Q = {})", q, layout.num_components()));
  }
  if (steps == 0) reject("traverse: need at least one step");
  if (!(lo <= hi)) reject("traverse: range minimum exceeds maximum");
  if (image.batch != 1) reject("traverse: expected a single image");
  check_image_shape(model, image);

  const OjaPcaState& state = layout.states()[0];
  Traversal out;
  out.component = q;
  out.sigma = std::sqrt(explained_variance(state, encode_all(model, reference).as_rows())[q]);

  const LatentTensor h = encode_all(model, image);
  const Vector y = project(state, h.sample(0));
  LatentTensor edited(steps, h.channels, h.height, h.width);
  for (std::size_t s = 0; s < steps; ++s) {
    const double v = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps - 1);
    Vector ys = y;
    ys[q] = v * out.sigma;
    const Vector z = reconstruct(state, ys);
    std::copy(z.begin(), z.end(), edited.sample(s).begin());
    out.rows.push_back({v, ys[q], {}});
  }
  out.frames = decoder_forward(model.decoder, edited, model.image);
  for (std::size_t s = 0; s < steps; ++s) {
    out.rows[s].stats = frame_statistics(gray_plane(out.frames, s), out.frames.height, out.frames.width);
  }
  return out;
}

DenseMatrix factor_correlations(const AutoencoderModel& model, const BottleneckLayout& layout,
                                const ImageBatch& images, const DenseMatrix& factors, std::size_t top) {
  if (layout.mode() != LayoutMode::single_vector) reject("factor_correlations: single_vector layout required");
  if (factors.rows() != images.batch) reject(InputErrorKind::dimension_mismatch, "factor_correlations: one factor row per image");
  top = std::min(top, layout.num_components());
  const OjaPcaState& state = layout.states()[0];
  const LatentTensor h = encode_all(model, images);
  DenseMatrix coeffs(images.batch, top);
  for (std::size_t b = 0; b < images.batch; ++b) {
    const Vector y = project(state, h.sample(b));
    for (std::size_t q = 0; q < top; ++q) coeffs(b, q) = y[q];
  }
  DenseMatrix r(top, factors.cols());
  for (std::size_t q = 0; q < top; ++q)
    for (std::size_t f = 0; f < factors.cols(); ++f) r(q, f) = pearson(coeffs.col(q), factors.col(f));
  return r;
}

TraverseReport cmd_traverse(const ExperimentConfig& config) {
  config.validate();
  const Checkpoint ckpt = load_for(config);
  const AutoencoderModel& model = ckpt.model;
  if (model.layout.mode() != LayoutMode::single_vector) {
    reject("traverse: only single_vector checkpoints have a global latent to traverse");
  }
  const LoadedData data = load_dataset(config);
  check_image_shape(model, data.images);
  if (config.traverse_image >= data.images.batch) {
    reject(fmt::format("traverse_image {} out of range ({} images)", config.traverse_image, data.images.batch));
  }

  const BottleneckLayout sorted = sorted_layout(model, data.images);
  TraverseReport report;
  report.traversal =
      traverse_component(model, sorted, data.images, slice(data.images, config.traverse_image, 1),
                         config.traverse_component, config.traverse_min, config.traverse_max, config.traverse_steps);
  const Traversal& t = report.traversal;

  ensure_dir(config.output_dir);
  const std::size_t h = t.frames.height, w = t.frames.width;
  GrayImage strip;
  strip.height = h;
  strip.width = t.frames.batch * (w + kGridGap) - kGridGap;
  strip.pixels.assign(strip.height * strip.width, 1.0);
  for (std::size_t s = 0; s < t.frames.batch; ++s) blit(strip, gray_plane(t.frames, s), h, w, 0, s * (w + kGridGap));
  report.strip_path = fs::path(config.output_dir) / "traverse.pgm";
  write_pgm(report.strip_path, strip);

  std::string csv = "frame,value,coefficient,mean_intensity,centroid_x,spread\n";
  for (std::size_t s = 0; s < t.rows.size(); ++s) {
    const auto& r = t.rows[s];
    csv += fmt::format("{},{},{},{},{},{}\n", s, csv_real(r.value), csv_real(r.coefficient),
                       csv_real(r.stats.mean_intensity), csv_real(r.stats.centroid_x), csv_real(r.stats.spread));
  }
  report.csv_path = fs::path(config.output_dir) / "traverse.csv";
  write_text(report.csv_path, csv);

  if (data.factors) {
    report.correlations = factor_correlations(model, sorted, data.images, *data.factors, 3);
    std::string fc = "component";
    for (const char* name : kToyFactorNames) fc += fmt::format(",{}", name);
    fc += "\n";
    for (std::size_t q = 0; q < report.correlations->rows(); ++q) {
      fc += std::to_string(q);
      for (std::size_t f = 0; f < report.correlations->cols(); ++f) fc += "," + csv_real((*report.correlations)(q, f));
      fc += "\n";
    }
    write_text(fs::path(config.output_dir) / "factor_correlations.csv", fc);
  }
  return report;
}

std::string budget_table(const std::vector<BitBudgetSpec>& specs, bool ceil_per_token) {
  std::string out = "kind,tokens,channels,bits_per_value,codebook_size,bits\n";
  for (const auto& s : specs) {
    if (s.kind == BitBudgetSpec::Kind::continuous) {
      out += fmt::format("continuous,{},{},{},,{}\n", s.tokens, s.channels, s.bits_per_value,
                         csv_real(bit_budget(s, ceil_per_token)));
    } else {
      out += fmt::format("discrete,{},,,{},{}\n", s.tokens, s.codebook_size, csv_real(bit_budget(s, ceil_per_token)));
    }
  }
  return out;
}

}  // namespace opca
