#pragma once

#include <anicemc/logistic.hpp>
#include <anicemc/samplers.hpp>
#include <anicemc/training.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace anicemc::cli {

/// Everything one command needs: target, kernel, training and run sizes.
struct ExperimentConfig {
  // Target.
  std::string target = "ring";
  std::filesystem::path data_path;  // BLR datasets only
  double prior_variance = kBlrPriorVariance;
  double mog6_radius = kMog6DefaultRadius;
  bool mog_literal_sum = false;

  // Kernel and run sizes.
  std::string kernel = "hmc";  // hmc | anicemc
  HmcConfig hmc;
  std::size_t chains = 64;
  std::size_t burn_in = 1000;
  std::size_t steps = 1000;
  double init_sigma = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;

  // Reference moments for ESS: exact draws for 2D energies, a long HMC run otherwise.
  std::size_t reference_samples = 200000;
  std::size_t reference_chains = 16;
  std::size_t reference_burn_in = 1000;
  std::size_t reference_steps = 5000;

  TrainConfig train;

  bool is_blr() const;
  /// Throws ConfigError for inconsistent values or missing referenced files.
  void validate() const;
};

/// Every accepted key, in emission order.
const std::vector<std::string>& config_keys();

/// Applies one `key = value` assignment. Unknown keys throw ConfigError.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& config, const std::string& key);

/// Parses flat `key = value` lines on top of `base`. `#` starts a comment.
/// Unknown or repeated keys throw ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every key with its effective value, one per line, in config_keys() order.
std::string emit_config(const ExperimentConfig& config);

/// Directory holding the shipped `<name>.conf` presets. ANICEMC_PRESET_DIR
/// in the environment takes precedence over the compiled-in location.
std::filesystem::path preset_directory();
/// `name` is either a shipped preset name or a path to a config file.
ExperimentConfig load_preset(const std::string& name);

}  // namespace anicemc::cli
