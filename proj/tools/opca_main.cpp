// opca: train, evaluate and inspect online-PCA bottleneck autoencoders.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "opca/errors.hpp"
#include "opca/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kNumericalError = 3 };

struct ConfigArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// Positional config file plus one --<key> flag per configuration key.
void add_config_options(CLI::App& cmd, ConfigArgs& args) {
  cmd.add_option("config", args.config_path, "key=value configuration file");
  for (const auto& key : opca::config_keys()) {
    cmd.add_option_function<std::string>(
        "--" + key, [&args, key](const std::string& v) { args.overrides[key] = v; }, "overrides '" + key + "'");
  }
}

opca::ExperimentConfig resolve(const ConfigArgs& args) {
  opca::ExperimentConfig config;
  if (!args.config_path.empty()) config = opca::load_config(args.config_path);
  for (const auto& [key, value] : args.overrides) opca::apply_setting(config, key, value);
  config.validate();
  return config;
}

std::vector<std::uint64_t> split_counts(const std::string& text, std::size_t expected) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto colon = text.find(':', pos);
    const std::string item = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw opca::ConfigError("budget: cannot parse '" + text + "'");
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (out.size() != expected) throw opca::ConfigError("budget: expected " + std::to_string(expected) + " fields in '" + text + "'");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Online-PCA bottleneck autoencoder toolkit"};
  app.require_subcommand(1);

  ConfigArgs train_args, eval_args, scaling_args, traverse_args;
  auto* train = app.add_subcommand("train", "train a model; writes checkpoint and train_log.csv");
  add_config_options(*train, train_args);
  auto* eval = app.add_subcommand("eval", "score sorted truncations of a checkpoint; writes eval.csv");
  add_config_options(*eval, eval_args);
  auto* scaling = app.add_subcommand("scaling", "fraction-of-bases sweep; writes scaling.csv and grids");
  add_config_options(*scaling, scaling_args);
  auto* traverse = app.add_subcommand("traverse", "vary one sorted component; writes traverse.pgm/.csv");
  add_config_options(*traverse, traverse_args);

  std::vector<std::string> continuous_specs, discrete_specs;
  bool ceil_per_token = false;
  auto* budget = app.add_subcommand("budget", "print latent bit budgets");
  budget->add_option("--continuous", continuous_specs, "tokens:channels:bits, repeatable");
  budget->add_option("--discrete", discrete_specs, "tokens:codebook_size, repeatable");
  budget->add_flag("--ceil_per_token", ceil_per_token, "charge ceil(log2 K) bits per discrete token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (train->parsed()) {
    const auto report = opca::cmd_train(resolve(train_args));
    const auto& last = report.log.back();
    fmt::print("steps={} final_loss={} drift={}\ncheckpoint={}\nlog={}\n", report.log.size(), opca::csv_real(last.loss),
               opca::csv_real(last.drift), report.checkpoint_path.string(), report.log_path.string());
  } else if (eval->parsed()) {
    const auto rows = opca::cmd_eval(resolve(eval_args));
    fmt::print("k,bits,mse,psnr,ssim\n");
    for (const auto& r : rows) {
      fmt::print("{},{},{},{},{}\n", r.k, opca::csv_real(r.bits), opca::csv_real(r.mse), opca::csv_real(r.psnr),
                 opca::csv_real(r.ssim));
    }
  } else if (scaling->parsed()) {
    const auto rows = opca::cmd_scaling(resolve(scaling_args));
    fmt::print("fraction,k,psnr,grid\n");
    for (const auto& r : rows) {
      fmt::print("{},{},{},{}\n", opca::csv_real(r.fraction), r.eval.k, opca::csv_real(r.eval.psnr), r.grid_path.string());
    }
  } else if (traverse->parsed()) {
    const auto report = opca::cmd_traverse(resolve(traverse_args));
    fmt::print("component={} sigma={}\nstrip={}\ncsv={}\n", report.traversal.component,
               opca::csv_real(report.traversal.sigma), report.strip_path.string(), report.csv_path.string());
  } else if (budget->parsed()) {
    std::vector<opca::BitBudgetSpec> specs;
    for (const auto& s : continuous_specs) {
      const auto v = split_counts(s, 3);
      specs.push_back(opca::BitBudgetSpec::continuous(v[0], v[1], v[2]));
    }
    for (const auto& s : discrete_specs) {
      const auto v = split_counts(s, 2);
      specs.push_back(opca::BitBudgetSpec::discrete(v[0], v[1]));
    }
    if (specs.empty()) {
      // 16x16 token grid: 256 channels of 32-bit floats vs an 8192-entry codebook.
      specs.push_back(opca::BitBudgetSpec::continuous(256, 256, 32));
      specs.push_back(opca::BitBudgetSpec::discrete(256, 8192));
    }
    fmt::print("{}", opca::budget_table(specs, ceil_per_token));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const opca::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const opca::NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kNumericalError;
  } catch (const opca::InputError& e) {
    fmt::print(stderr, "data error ({}): {}\n", opca::to_string(e.kind()), e.what());
    return kDataError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kDataError;
  }
}
