#pragma once

// Flat key=value experiment configuration. '#' starts a comment line; blank
// lines are ignored; unknown keys are rejected with ConfigError.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "opca/autoencoder.hpp"
#include "opca/bottleneck.hpp"
#include "opca/datasets.hpp"

namespace opca {

enum class DatasetKind { toy_shapes, pgm_dir };

struct ExperimentConfig {
  // training
  std::uint64_t epochs = 1;
  std::uint64_t batch_size = 16;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
  std::uint64_t hidden_units = 64;
  bool update_before_forward = true;

  // latent and bottleneck
  LayoutMode mode = LayoutMode::single_vector;
  std::uint64_t latent_channels = 16;
  std::uint64_t latent_height = 1;
  std::uint64_t latent_width = 1;
  std::uint64_t num_components = 16;
  double gamma = 0.99;
  double eta0 = 0.01;
  LearningRateSchedule::Kind eta_schedule = LearningRateSchedule::Kind::constant;
  double eta_decay = 0.0;
  std::uint64_t ortho_period = 1;
  double eps_ortho = 1e-8;
  BackwardMode backward_mode = BackwardMode::projector;

  // data
  DatasetKind dataset = DatasetKind::toy_shapes;
  std::string data_dir;
  std::uint64_t image_size = 16;
  std::uint64_t num_images = 256;
  std::uint64_t data_seed = 1;
  ToyShape shape = ToyShape::disc;

  // evaluation and sweeps
  std::string checkpoint;  // empty: <output_dir>/checkpoint.opca
  std::vector<std::uint64_t> eval_k;  // empty: all components
  std::vector<double> fractions{0.0625, 0.125, 0.25, 0.5, 1.0};
  std::uint64_t bits_per_value = 32;
  std::uint64_t grid_columns = 8;
  std::uint64_t traverse_image = 0;
  std::uint64_t traverse_component = 0;
  double traverse_min = -2.0;
  double traverse_max = 2.0;
  std::uint64_t traverse_steps = 9;

  std::string output_dir = "out";

  LatentShape latent_shape() const { return {latent_channels, latent_height, latent_width}; }
  BottleneckConfig bottleneck_config() const;
  TrainOptions train_options() const;
  std::filesystem::path checkpoint_path() const;

  /// Throws ConfigError on out-of-range settings.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Names of every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Canonical key=value text; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace opca
