#pragma once

// Orchestration behind the command-line tool. Each cmd_* reads an
// ExperimentConfig, writes its outputs under config.output_dir and returns
// what it wrote so tests can inspect results without parsing files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opca/checkpoint.hpp"
#include "opca/config.hpp"
#include "opca/metrics.hpp"

namespace opca {

/// Fixed-notation-free, locale-independent 17-significant-digit rendering.
std::string csv_real(double x);

struct LoadedData {
  ImageBatch images;
  /// Generative factors (M x 3) for toy shapes; empty for image directories.
  std::optional<DenseMatrix> factors;
};

LoadedData load_dataset(const ExperimentConfig& config);

AutoencoderModel create_model(const ExperimentConfig& config, const ImageShape& image);

// --- train -----------------------------------------------------------------

struct TrainLogRow {
  std::uint64_t step = 0;
  double loss = 0.0;
  double drift = 0.0;
  double mean_delta_norm = 0.0;
};

struct TrainReport {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;  // train_log.csv
};

/// Minibatch order for one epoch; a pure function of (seed, epoch, count).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t epoch, std::size_t count);

TrainReport cmd_train(const ExperimentConfig& config);

// --- eval ------------------------------------------------------------------

struct EvalRow {
  std::size_t k = 0;
  double bits = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Layout with components ordered by explained variance on `images`' latents.
BottleneckLayout sorted_layout(const AutoencoderModel& model, const ImageBatch& images);

/// One row per k: sort, truncate to k, reconstruct, score. MSE is per pixel.
std::vector<EvalRow> evaluate_truncations(const AutoencoderModel& model, const ImageBatch& images,
                                          const std::vector<std::size_t>& ks, std::uint64_t bits_per_value);

/// eval.csv; ks from config.eval_k, or Q alone when that list is empty.
std::vector<EvalRow> cmd_eval(const ExperimentConfig& config);

// --- scaling ---------------------------------------------------------------

struct ScalingRow {
  double fraction = 0.0;
  EvalRow eval;
  std::filesystem::path grid_path;
};

/// max(1, round(fraction * q))
std::size_t components_for_fraction(double fraction, std::size_t q);

inline constexpr std::size_t kGridGap = 1;

/// Two grid rows (originals above reconstructions), `columns` images each.
/// Every cell is (H + gap) x (W + gap) with the gap on the bottom and right
/// edges, so the image is 2(H + gap) x columns(W + gap). Gap pixels are white.
GrayImage comparison_grid(const ImageBatch& originals, const ImageBatch& reconstructions, std::size_t columns);

/// scaling.csv plus scaling_grid_<i>.pgm for the i-th fraction.
std::vector<ScalingRow> cmd_scaling(const ExperimentConfig& config);

// --- traverse --------------------------------------------------------------

/// Summary statistics of a single-channel frame, computed on [0, 1]-clamped
/// pixels. centroid_x and spread are intensity-weighted (column of mass and
/// RMS distance from the centre of mass, in pixels).
struct FrameStatistics {
  double mean_intensity = 0.0;
  double centroid_x = 0.0;
  double spread = 0.0;
};

FrameStatistics frame_statistics(std::span<const double> pixels, std::size_t height, std::size_t width);

/// Image statistic that tracks each toy-shape factor: x_position -> centroid_x,
/// radius -> spread, brightness -> mean_intensity.
double statistic_for_factor(const FrameStatistics& s, std::size_t factor);

struct TraversalFrame {
  double value = 0.0;        // in explained standard deviations
  double coefficient = 0.0;  // value * sigma_q, as written into the latent
  FrameStatistics stats;
};

struct Traversal {
  std::size_t component = 0;
  double sigma = 0.0;
  ImageBatch frames;
  std::vector<TraversalFrame> rows;
};

/// Encodes `image` (batch of one), sets sorted coefficient q to v·sigma_q for
/// each of `steps` evenly spaced v in [lo, hi], and decodes. Other
/// coefficients keep their encoded values. `layout` must be sorted and
/// `reference` supplies the latents sigma_q is measured on.
Traversal traverse_component(const AutoencoderModel& model, const BottleneckLayout& layout,
                             const ImageBatch& reference, const ImageBatch& image, std::size_t q, double lo,
                             double hi, std::size_t steps);

/// Pearson r between each of the first `top` sorted coefficients (rows) and
/// each factor column.
DenseMatrix factor_correlations(const AutoencoderModel& model, const BottleneckLayout& layout,
                                const ImageBatch& images, const DenseMatrix& factors, std::size_t top);

struct TraverseReport {
  Traversal traversal;
  std::optional<DenseMatrix> correlations;
  std::filesystem::path strip_path;
  std::filesystem::path csv_path;
};

/// traverse.pgm, traverse.csv, and factor_correlations.csv when the dataset
/// carries factors. Rejects multi_patch checkpoints.
TraverseReport cmd_traverse(const ExperimentConfig& config);

// --- budget ----------------------------------------------------------------

/// CSV table, one row per spec: kind,tokens,channels,bits_per_value,codebook_size,bits
std::string budget_table(const std::vector<BitBudgetSpec>& specs, bool ceil_per_token);

}  // namespace opca
