#pragma once

#include "anicemc_cli/config.hpp"

#include <anicemc/diagnostics.hpp>
#include <anicemc/targets.hpp>

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace anicemc::cli {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4 };

/// Maps the library's error hierarchy onto exit codes.
int exit_code_for(const std::exception& e);

std::unique_ptr<EnergyTarget> make_target(const ExperimentConfig& config);

/// Reference moments for ESS on `target`: rejection draws for 2D energies,
/// pooled draws of a long HMC run otherwise. nullopt when disabled (zero samples/steps).
std::optional<ReferenceMoments> reference_moments(const EnergyTarget& target, const ExperimentConfig& config);

/// Loads a NICE checkpoint and checks it against the target dimension.
NiceModel load_model(const std::filesystem::path& path, const EnergyTarget& target);

/// Runs the configured kernel (checkpoint required for anicemc).
ChainDump sample_chains(const ExperimentConfig& config, const EnergyTarget& target,
                        const std::string& kernel);

/// 2D histogram over [lo, hi]² with `bins` × `bins` cells, row 0 at the top (largest y).
struct DensityGrid {
  std::size_t bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;  // row-major
  std::uint64_t outside = 0;
  std::uint64_t inside() const;
};
DensityGrid density_grid(const ChainDump& dump, std::size_t bins = 200, double lo = -6.0, double hi = 6.0);
/// Binary PGM; darker cells hold more samples, scaled linearly to the fullest cell.
std::string density_pgm(const DensityGrid& grid);

struct KernelSummary {
  std::string kernel;
  double min_ess = 0.0;
  double ess_per_second = 0.0;
  double acceptance = 0.0;
  double rhat = 0.0;
  double wall_time_seconds = 0.0;
  std::vector<std::string> quantities;
  std::vector<double> per_quantity_ess;
};
/// ESS, ESS/s, acceptance and R-hat (of the summary statistic, else the worst coordinate).
KernelSummary summarize(const ChainDump& dump, const EnergyTarget& target,
                        const std::optional<ReferenceMoments>& reference);

// Subcommands. Each writes into config.out_dir and returns an exit code.
int cmd_train(const ExperimentConfig& config, std::ostream& out);
int cmd_sample(const ExperimentConfig& config, std::ostream& out);
int cmd_benchmark(const ExperimentConfig& config, std::ostream& out);
int cmd_diagnose(const ExperimentConfig& config, const std::vector<std::filesystem::path>& dumps,
                 bool raster, std::ostream& out);

}  // namespace anicemc::cli
