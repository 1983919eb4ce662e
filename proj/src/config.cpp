#include "opca/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "opca/errors.hpp"

namespace opca {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_count(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  // strtod is locale-dependent; from_chars for double is not available in
  // every toolchain we build with, so parse through the classic locale.
  std::istringstream in{std::string(v)};
  in.imbue(std::locale::classic());
  double out = 0.0;
  in >> out;
  if (v.empty() || in.fail() || !in.eof()) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, v));
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(v.substr(0, comma));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <class E>
E to_enum(std::string_view key, std::string_view v, std::initializer_list<std::pair<std::string_view, E>> table) {
  for (const auto& [name, value] : table)
    if (name == v) return value;
  std::string options;
  for (const auto& [name, value] : table) options += (options.empty() ? "" : "|") + std::string(name);
  throw ConfigError(fmt::format("{}: expected one of {}, got '{}'", key, options, v));
}

std::string real_text(double x) { return fmt::format("{:.17g}", x); }

struct KeyHandler {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Registry = std::vector<std::pair<std::string, KeyHandler>>;

#define OPCA_COUNT(name)                                                                            \
  {#name, {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.name = to_count(k, v); }, \
           [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define OPCA_REAL(name)                                                                            \
  {#name, {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.name = to_real(k, v); }, \
           [](const ExperimentConfig& c) { return real_text(c.name); }}}
#define OPCA_STRING(name)                                                                        \
  {#name, {[](ExperimentConfig& c, std::string_view, std::string_view v) { c.name = std::string(v); }, \
           [](const ExperimentConfig& c) { return c.name; }}}

const Registry& registry() {
  static const Registry reg = {
      OPCA_COUNT(epochs),
      OPCA_COUNT(batch_size),
      OPCA_REAL(learning_rate),
      OPCA_COUNT(seed),
      OPCA_COUNT(hidden_units),
      {"update_before_forward",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) { c.update_before_forward = to_bool(k, v); },
        [](const ExperimentConfig& c) { return std::string(c.update_before_forward ? "true" : "false"); }}},
      {"mode",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.mode = to_enum<LayoutMode>(k, v, {{"single_vector", LayoutMode::single_vector},
                                              {"multi_patch", LayoutMode::multi_patch}});
        },
        [](const ExperimentConfig& c) {
          return std::string(c.mode == LayoutMode::single_vector ? "single_vector" : "multi_patch");
        }}},
      OPCA_COUNT(latent_channels),
      OPCA_COUNT(latent_height),
      OPCA_COUNT(latent_width),
      OPCA_COUNT(num_components),
      OPCA_REAL(gamma),
      OPCA_REAL(eta0),
      {"eta_schedule",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.eta_schedule = to_enum<LearningRateSchedule::Kind>(
              k, v, {{"constant", LearningRateSchedule::Kind::constant},
                     {"inverse_time", LearningRateSchedule::Kind::inverse_time}});
        },
        [](const ExperimentConfig& c) {
          return std::string(c.eta_schedule == LearningRateSchedule::Kind::constant ? "constant" : "inverse_time");
        }}},
      OPCA_REAL(eta_decay),
      OPCA_COUNT(ortho_period),
      OPCA_REAL(eps_ortho),
      {"backward_mode",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.backward_mode = to_enum<BackwardMode>(
              k, v, {{"projector", BackwardMode::projector}, {"straight_through", BackwardMode::straight_through}});
        },
        [](const ExperimentConfig& c) {
          return std::string(c.backward_mode == BackwardMode::projector ? "projector" : "straight_through");
        }}},
      {"dataset",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.dataset = to_enum<DatasetKind>(k, v, {{"toy_shapes", DatasetKind::toy_shapes},
                                                  {"pgm_dir", DatasetKind::pgm_dir}});
        },
        [](const ExperimentConfig& c) {
          return std::string(c.dataset == DatasetKind::toy_shapes ? "toy_shapes" : "pgm_dir");
        }}},
      OPCA_STRING(data_dir),
      OPCA_COUNT(image_size),
      OPCA_COUNT(num_images),
      OPCA_COUNT(data_seed),
      {"shape",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.shape = to_enum<ToyShape>(k, v, {{"disc", ToyShape::disc}, {"rectangle", ToyShape::rectangle}});
        },
        [](const ExperimentConfig& c) { return std::string(c.shape == ToyShape::disc ? "disc" : "rectangle"); }}},
      OPCA_STRING(checkpoint),
      {"eval_k",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.eval_k.clear();
          for (auto item : split_list(v)) c.eval_k.push_back(to_count(k, trim(item)));
        },
        [](const ExperimentConfig& c) { return fmt::format("{}", fmt::join(c.eval_k, ",")); }}},
      {"fractions",
       {[](ExperimentConfig& c, std::string_view k, std::string_view v) {
          c.fractions.clear();
          for (auto item : split_list(v)) c.fractions.push_back(to_real(k, trim(item)));
        },
        [](const ExperimentConfig& c) {
          std::string s;
          for (double f : c.fractions) s += (s.empty() ? "" : ",") + real_text(f);
          return s;
        }}},
      OPCA_COUNT(bits_per_value),
      OPCA_COUNT(grid_columns),
      OPCA_COUNT(traverse_image),
      OPCA_COUNT(traverse_component),
      OPCA_REAL(traverse_min),
      OPCA_REAL(traverse_max),
      OPCA_COUNT(traverse_steps),
      OPCA_STRING(output_dir),
  };
  return reg;
}

#undef OPCA_COUNT
#undef OPCA_REAL
#undef OPCA_STRING

}  // namespace

BottleneckConfig ExperimentConfig::bottleneck_config() const {
  BottleneckConfig b;
  b.mode = mode;
  b.num_components = num_components;
  b.oja.schedule = {eta_schedule, eta0, eta_decay};
  b.oja.gamma = gamma;
  b.oja.ortho_period = ortho_period;
  b.oja.eps_ortho = eps_ortho;
  b.backward = backward_mode;
  b.seed = seed;
  return b;
}

TrainOptions ExperimentConfig::train_options() const {
  TrainOptions t;
  t.adam.learning_rate = learning_rate;
  t.update_before_forward = update_before_forward;
  return t;
}

std::filesystem::path ExperimentConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return std::filesystem::path(output_dir) / "checkpoint.opca";
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(hidden_units >= 1, "hidden_units must be >= 1");
  require(latent_channels >= 1 && latent_height >= 1 && latent_width >= 1, "latent dimensions must be >= 1");
  const std::uint64_t block = mode == LayoutMode::single_vector ? latent_channels * latent_height * latent_width
                                                                : latent_channels;
  require(num_components >= 1 && num_components <= block,
          fmt::format("num_components must lie in [1, {}] for this layout", block));
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(eta0 > 0.0, "eta0 must be positive");
  require(eta_decay >= 0.0, "eta_decay must be nonnegative");
  require(ortho_period >= 1, "ortho_period must be >= 1");
  require(eps_ortho > 0.0, "eps_ortho must be positive");
  require(dataset != DatasetKind::pgm_dir || !data_dir.empty(), "dataset=pgm_dir requires data_dir");
  require(image_size >= 8, "image_size must be >= 8");
  require(num_images >= 1, "num_images must be >= 1");
  for (std::uint64_t k : eval_k) require(k >= 1, "eval_k entries must be >= 1");
  for (double f : fractions) require(f > 0.0 && f <= 1.0, "fractions must lie in (0, 1]");
  require(bits_per_value >= 1, "bits_per_value must be >= 1");
  require(grid_columns >= 1, "grid_columns must be >= 1");
  require(traverse_steps >= 1, "traverse_steps must be >= 1");
  require(traverse_min <= traverse_max, "traverse_min must not exceed traverse_max");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, h] : registry()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  for (const auto& [name, handler] : registry()) {
    if (name == key) {
      handler.set(config, key, value);
      return;
    }
  }
  throw ConfigError(fmt::format("unknown configuration key '{}'", key));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key=value", line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, handler] : registry()) out += name + "=" + handler.get(config) + "\n";
  return out;
}

}  // namespace opca
