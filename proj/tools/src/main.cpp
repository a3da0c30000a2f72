#include "anicemc_cli/commands.hpp"
#include "anicemc_cli/config.hpp"

#include <anicemc/errors.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
  std::string preset;
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::string> target, kernel, checkpoint, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains, burn_in, steps, iterations;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--preset", o.preset, "Shipped preset name or path to a .conf file");
  cmd->add_option("--config", o.config_file, "Config file applied on top of the preset");
  cmd->add_option("--set", o.assignments, "Extra key=value assignments")->take_all();
  cmd->add_option("--target", o.target, "ring, mog2, mog6, ring5, german, heart or australian");
  cmd->add_option("--kernel", o.kernel, "Sampler")->check(CLI::IsMember({"hmc", "anicemc"}));
  cmd->add_option("--checkpoint", o.checkpoint, "Trained NICE checkpoint");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--chains", o.chains, "Number of parallel chains");
  cmd->add_option("--burn-in", o.burn_in, "Discarded steps per chain");
  cmd->add_option("--steps", o.steps, "Recorded steps per chain");
  cmd->add_option("--threads", o.threads, "Worker thread cap");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--iterations", o.iterations, "Training iterations");
}

anicemc::cli::ExperimentConfig resolve(const Overrides& o) {
  using namespace anicemc::cli;
  ExperimentConfig c = o.preset.empty() ? ExperimentConfig{} : load_preset(o.preset);
  if (!o.config_file.empty()) c = load_config_file(o.config_file, c);
  for (const auto& a : o.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw anicemc::ConfigError("--set expects key=value, got '" + a + "'");
    set_config_value(c, a.substr(0, eq), a.substr(eq + 1));
  }
  if (o.target) c.target = *o.target;
  if (o.kernel) c.kernel = *o.kernel;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.chains) c.chains = *o.chains;
  if (o.burn_in) c.burn_in = *o.burn_in;
  if (o.steps) c.steps = *o.steps;
  if (o.threads) c.threads = *o.threads;
  if (o.iterations) c.train.iterations = *o.iterations;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace anicemc::cli;
  CLI::App app{"Adversarially trained NICE proposals for MCMC, benchmarked against HMC"};
  app.require_subcommand(1);
  Overrides o;
  bool raster = false;
  std::vector<std::string> dumps;

  auto* train = app.add_subcommand("train", "Train a NICE proposal; writes model.ckpt, train_log.jsonl, ess_snapshots.csv");
  auto* sample = app.add_subcommand("sample", "Run chains; writes samples.csv and samples.json");
  auto* bench = app.add_subcommand("benchmark", "Compare HMC and the trained kernel; writes benchmark.json");
  auto* diag = app.add_subcommand("diagnose", "ESS, R-hat and error curves for chain dumps; writes diagnose.json");
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  for (auto* cmd : {train, sample, bench, diag, show}) add_common(cmd, o);
  diag->add_flag("--raster", raster, "Also write a 200x200 density raster (PGM) per dump");
  diag->add_option("dumps", dumps, "Chain dump CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const ExperimentConfig config = resolve(o);
    if (*show) {
      std::cout << emit_config(config);
      return kExitOk;
    }
    if (*train) return cmd_train(config, std::cout);
    if (*sample) return cmd_sample(config, std::cout);
    if (*bench) return cmd_benchmark(config, std::cout);
    std::vector<std::filesystem::path> paths(dumps.begin(), dumps.end());
    return cmd_diagnose(config, paths, raster, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  }
}
