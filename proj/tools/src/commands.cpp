#include "anicemc_cli/commands.hpp"

#include <anicemc/chain_io.hpp>
#include <anicemc/checkpoint.hpp>
#include <anicemc/errors.hpp>
#include <anicemc/logistic.hpp>
#include <anicemc/samplers.hpp>
#include <anicemc/training.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace anicemc::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RunConfig run_config(const ExperimentConfig& c) {
  RunConfig rc;
  rc.n_chains = c.chains;
  rc.burn_in = c.burn_in;
  rc.n_steps = c.steps;
  rc.seed = c.seed;
  rc.init_sigma = c.init_sigma;
  rc.threads = c.threads;
  return rc;
}

nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

std::vector<std::size_t> curve_lengths(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t base = 10; base <= n; base *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      if (base * m <= n) out.push_back(base * m);
    }
  }
  if (n > 0 && (out.empty() || out.back() != n)) out.push_back(n);
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string fixed(double v, int precision) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const IngestionError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
  return kExitConfig;
}

std::unique_ptr<EnergyTarget> make_target(const ExperimentConfig& config) {
  if (config.is_blr()) {
    auto data = load_uci_csv(config.data_path, dataset_preset(config.target));
    return std::make_unique<LogisticRegressionTarget>(std::move(data), config.prior_variance);
  }
  AnalyticOptions opts;
  opts.mog_literal_sum = config.mog_literal_sum;
  opts.mog6_radius = config.mog6_radius;
  return make_analytic_target(config.target, opts);
}

std::optional<ReferenceMoments> reference_moments(const EnergyTarget& target, const ExperimentConfig& config) {
  if (const auto* analytic = dynamic_cast<const AnalyticTarget*>(&target)) {
    if (config.reference_samples < 2) return std::nullopt;
    auto rng = make_stream(config.seed, Stream::Reference);
    const Tensor draws = rejection_sample(*analytic, config.reference_samples, rng);
    return moments_of(draws, target, "rejection");
  }
  if (config.reference_steps == 0 || config.reference_chains == 0) return std::nullopt;
  RunConfig rc;
  rc.n_chains = config.reference_chains;
  rc.burn_in = config.reference_burn_in;
  rc.n_steps = config.reference_steps;
  rc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(Stream::Reference), 0);
  rc.init_sigma = config.init_sigma;
  rc.threads = config.threads;
  const ChainDump ref = run_chain(HmcKernel(config.hmc), target, rc);
  const std::size_t rows = ref.n_chains * ref.n_steps;
  Tensor draws(Shape{rows, ref.dim}, Storage(ref.samples.begin(), ref.samples.end()));
  return moments_of(draws, target, "hmc");
}

NiceModel load_model(const std::filesystem::path& path, const EnergyTarget& target) {
  if (path.empty()) throw ConfigError("the anicemc kernel needs a checkpoint (--checkpoint)");
  NiceModel model = NiceModel::from_checkpoint(read_checkpoint(path));
  if (model.x_dim() != target.dim()) {
    throw ConfigError("checkpoint '" + path.string() + "' has x dimension " + std::to_string(model.x_dim()) +
                      " but target " + target.name() + " has dimension " + std::to_string(target.dim()));
  }
  return model;
}

ChainDump sample_chains(const ExperimentConfig& config, const EnergyTarget& target, const std::string& kernel) {
  if (kernel == "hmc") return run_chain(HmcKernel(config.hmc), target, run_config(config));
  const NiceModel model = load_model(config.checkpoint, target);
  return run_chain(NiceMhKernel(model), target, run_config(config));
}

std::uint64_t DensityGrid::inside() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

DensityGrid density_grid(const ChainDump& dump, std::size_t bins, double lo, double hi) {
  if (dump.dim < 2) throw ConfigError("density raster needs at least two coordinates");
  if (bins == 0 || !(hi > lo)) throw ConfigError("density raster needs positive bins and hi > lo");
  DensityGrid g;
  g.bins = bins;
  g.lo = lo;
  g.hi = hi;
  g.counts.assign(bins * bins, 0);
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (std::size_t c = 0; c < dump.n_chains; ++c) {
    for (std::size_t t = 0; t < dump.n_steps; ++t) {
      const auto s = dump.state(c, t);
      const double fx = (s[0] - lo) * scale;
      const double fy = (hi - s[1]) * scale;
      if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(bins) && fy < static_cast<double>(bins))) {
        ++g.outside;
        continue;
      }
      ++g.counts[static_cast<std::size_t>(fy) * bins + static_cast<std::size_t>(fx)];
    }
  }
  return g;
}

std::string density_pgm(const DensityGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.bins) + " " + std::to_string(grid.bins) + "\n255\n";
  const std::uint64_t peak = grid.counts.empty() ? 0 : *std::max_element(grid.counts.begin(), grid.counts.end());
  for (auto c : grid.counts) {
    const double level = peak ? static_cast<double>(c) / static_cast<double>(peak) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - level)))));
  }
  return out;
}

KernelSummary summarize(const ChainDump& dump, const EnergyTarget& target,
                        const std::optional<ReferenceMoments>& reference) {
  KernelSummary s;
  s.kernel = dump.kernel;
  s.wall_time_seconds = dump.wall_time_seconds;
  s.acceptance = dump.acceptance_rate.empty() ? kNaN : dump.mean_acceptance();
  s.min_ess = kNaN;
  s.ess_per_second = kNaN;
  if (reference && dump.n_steps >= 2) {
    const EssReport r = ess_report(dump, target, *reference);
    s.min_ess = r.min_ess;
    s.ess_per_second = dump.wall_time_seconds > 0.0 ? ess_per_second(r, dump.wall_time_seconds) : kNaN;
    s.quantities = r.quantities;
    s.per_quantity_ess = r.per_quantity;
  }
  s.rhat = kNaN;
  if (dump.n_chains >= 2 && dump.n_steps >= 2) {
    if (target.has_summary()) {
      s.rhat = rhat(dump.statistic(target), "summary").rhat;
    } else {
      for (std::size_t d = 0; d < dump.dim; ++d) {
        const double r = rhat(dump.coordinate(d), "x" + std::to_string(d)).rhat;
        if (!(r <= s.rhat)) s.rhat = r;
      }
    }
  }
  return s;
}

int cmd_train(const ExperimentConfig& config, std::ostream& out) {
  const auto target = make_target(config);
  const auto reference = reference_moments(*target, config);
  ensure_dir(config.out_dir);
  write_file_atomic(config.out_dir / "config.conf", emit_config(config));

  TrainConfig tc = config.train;
  tc.threads = config.threads;
  tc.checkpoint_path = config.out_dir / "model.ckpt";

  std::string log;
  std::string snapshots = "iteration,acceptance,ess\n";
  const auto log_path = config.out_dir / "train_log.jsonl";
  const auto snap_path = config.out_dir / "ess_snapshots.csv";
  auto on_log = [&](const LogEntry& e) {
    log += log_entry_json(e) + "\n";
    if (e.event == "evaluate") {
      snapshots += std::to_string(e.iteration) + "," + format_double(e.acceptance.value_or(kNaN)) + "," +
                   (e.ess ? format_double(*e.ess) : std::string("nan")) + "\n";
      write_file_atomic(log_path, log);
      write_file_atomic(snap_path, snapshots);
      out << "iteration " << e.iteration << ": acceptance " << fixed(e.acceptance.value_or(kNaN), 3)
          << ", ESS " << fixed(e.ess.value_or(kNaN), 2) << std::endl;
    } else if (!e.event.empty()) {
      out << "iteration " << e.iteration << ": " << e.event << std::endl;
    }
  };
  const TrainResult result = train(*target, tc, config.seed, reference, on_log);
  write_file_atomic(log_path, log);
  write_file_atomic(snap_path, snapshots);
  out << "checkpoint written to " << tc.checkpoint_path.string() << std::endl;
  if (result.diverged) {
    out << "training diverged: " << result.message << std::endl;
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_sample(const ExperimentConfig& config, std::ostream& out) {
  const auto target = make_target(config);
  const ChainDump dump = sample_chains(config, *target, config.kernel);
  ensure_dir(config.out_dir);
  write_chain_dump(config.out_dir / "samples", dump);
  out << dump.kernel << " on " << target->name() << ": " << dump.n_chains << " chains x " << dump.n_steps
      << " steps, acceptance " << fixed(dump.acceptance_rate.empty() ? kNaN : dump.mean_acceptance(), 3)
      << ", " << fixed(dump.wall_time_seconds, 2) << " s" << std::endl;
  if (!dump.failure.empty()) {
    out << dump.failed_chains.size() << " chain(s) failed: " << dump.failure << std::endl;
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_benchmark(const ExperimentConfig& config, std::ostream& out) {
  const auto target = make_target(config);
  const auto reference = reference_moments(*target, config);
  const ChainDump hmc = sample_chains(config, *target, "hmc");
  const ChainDump nice = sample_chains(config, *target, "anicemc");
  const KernelSummary rows[2] = {summarize(hmc, *target, reference), summarize(nice, *target, reference)};
  const char* labels[2] = {"hmc", "anicemc"};

  nlohmann::ordered_json j;
  j["target"] = target->name();
  j["chains"] = config.chains;
  j["burn_in"] = config.burn_in;
  j["steps"] = config.steps;
  j["seed"] = config.seed;
  j["reference"] = reference ? reference->source : std::string("none");
  j["rows"] = nlohmann::ordered_json::array();
  for (int i = 0; i < 2; ++i) {
    const auto& r = rows[i];
    nlohmann::ordered_json row;
    row["kernel"] = labels[i];
    row["description"] = r.kernel;
    row["ess"] = number(r.min_ess);
    row["ess_per_second"] = number(r.ess_per_second);
    row["acceptance"] = number(r.acceptance);
    row["rhat"] = number(r.rhat);
    row["wall_time_seconds"] = r.wall_time_seconds;
    row["per_quantity_ess"] = nlohmann::ordered_json::object();
    for (std::size_t q = 0; q < r.quantities.size(); ++q) row["per_quantity_ess"][r.quantities[q]] = number(r.per_quantity_ess[q]);
    j["rows"].push_back(row);
  }
  j["ratios"]["ess"] = number(rows[1].min_ess / rows[0].min_ess);
  j["ratios"]["ess_per_second"] = number(rows[1].ess_per_second / rows[0].ess_per_second);
  ensure_dir(config.out_dir);
  write_file_atomic(config.out_dir / "benchmark.json", j.dump(2) + "\n");

  char line[160];
  std::snprintf(line, sizeof line, "%-10s %12s %12s %11s %9s %10s\n", "kernel", "ESS", "ESS/s", "acceptance",
                "R-hat", "time (s)");
  out << "target " << target->name() << ", " << config.chains << " chains, " << config.burn_in << " burn-in + "
      << config.steps << " steps\n"
      << line;
  for (int i = 0; i < 2; ++i) {
    const auto& r = rows[i];
    std::snprintf(line, sizeof line, "%-10s %12s %12s %11s %9s %10s\n", labels[i], fixed(r.min_ess, 2).c_str(),
                  fixed(r.ess_per_second, 1).c_str(), fixed(r.acceptance, 3).c_str(), fixed(r.rhat, 3).c_str(),
                  fixed(r.wall_time_seconds, 2).c_str());
    out << line;
  }
  out << "anicemc / hmc: ESS x" << fixed(rows[1].min_ess / rows[0].min_ess, 2) << ", ESS/s x"
      << fixed(rows[1].ess_per_second / rows[0].ess_per_second, 2) << std::endl;
  return kExitOk;
}

int cmd_diagnose(const ExperimentConfig& config, const std::vector<std::filesystem::path>& dumps, bool raster,
                 std::ostream& out) {
  if (dumps.empty()) throw ConfigError("diagnose needs at least one chain dump (CSV)");
  const auto target = make_target(config);
  const auto reference = reference_moments(*target, config);
  ensure_dir(config.out_dir);

  nlohmann::ordered_json j;
  j["target"] = target->name();
  j["reference"] = reference ? reference->source : std::string("none");
  j["dumps"] = nlohmann::ordered_json::array();
  for (const auto& path : dumps) {
    if (!std::filesystem::exists(path)) throw IoError("chain dump '" + path.string() + "' does not exist");
    const ChainDump dump = read_chain_dump(path);
    if (dump.dim != target->dim()) {
      throw ConfigError("dump '" + path.string() + "' has dimension " + std::to_string(dump.dim) + " but target " +
                        target->name() + " has dimension " + std::to_string(target->dim()));
    }
    const KernelSummary s = summarize(dump, *target, reference);
    nlohmann::ordered_json d;
    d["path"] = path.string();
    d["kernel"] = dump.kernel;
    d["chains"] = dump.n_chains;
    d["steps"] = dump.n_steps;
    d["ess"] = number(s.min_ess);
    d["rhat"] = number(s.rhat);
    d["acceptance"] = number(s.acceptance);
    d["per_quantity_ess"] = nlohmann::ordered_json::object();
    for (std::size_t q = 0; q < s.quantities.size(); ++q) d["per_quantity_ess"][s.quantities[q]] = number(s.per_quantity_ess[q]);

    d["error_curves"] = nlohmann::ordered_json::array();
    if (reference && dump.n_steps > 0) {
      const auto lengths = curve_lengths(dump.n_steps);
      const std::size_t nq = target->has_summary() ? 1 : dump.dim;
      for (std::size_t q = 0; q < nq; ++q) {
        const auto series = target->has_summary() ? dump.statistic(*target) : dump.coordinate(q);
        nlohmann::ordered_json curve;
        curve["quantity"] = target->has_summary() ? std::string("summary") : "x" + std::to_string(q);
        curve["truth"] = reference->mean[q];
        curve["points"] = nlohmann::ordered_json::array();
        for (const auto& p : error_curve(series, reference->mean[q], Estimator::Mean, lengths)) {
          curve["points"].push_back({{"length", p.length}, {"mae", p.mae}});
        }
        d["error_curves"].push_back(curve);
      }
    }
    if (raster) {
      const DensityGrid g = density_grid(dump);
      const auto pgm = config.out_dir / (path.stem().string() + ".pgm");
      write_file_atomic(pgm, density_pgm(g));
      d["raster"] = {{"path", pgm.string()}, {"inside", g.inside()}, {"outside", g.outside}};
    }
    j["dumps"].push_back(d);
    out << path.string() << ": ESS " << fixed(s.min_ess, 2) << ", R-hat " << fixed(s.rhat, 3) << std::endl;
  }
  write_file_atomic(config.out_dir / "diagnose.json", j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace anicemc::cli
