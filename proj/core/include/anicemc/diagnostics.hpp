#pragma once

#include "anicemc/samplers.hpp"
#include "anicemc/targets.hpp"

#include <span>
#include <string>
#include <vector>

namespace anicemc {

/// Per-quantity reference mean and variance, taken from an independent sampler.
struct ReferenceMoments {
  std::vector<double> mean;
  std::vector<double> variance;
  std::string source;
};

/// Series-major chains: chains[c][n].
using ChainSeries = std::vector<std::vector<double>>;

/// ρ̂_s = Σ_{n=s}^{N-1} (x_n - μ)(x_{n-s} - μ) / (σ² (N - s)) with externally supplied μ, σ².
double autocorrelation(std::span<const double> series, double ref_mean, double ref_var,
                       std::size_t lag);

/// Autocorrelation averaged over equally long chains.
double pooled_autocorrelation(const ChainSeries& chains, double ref_mean, double ref_var,
                              std::size_t lag);

struct EssEstimate {
  double ess = 0.0;
  /// Number of lags summed: the sum runs over s = 1..truncation_lag.
  std::size_t truncation_lag = 0;
};

/// N / (1 + 2 Σ_{s=1}^{S} (1 - s/N) ρ̂_s), S the last lag before ρ̂ first drops
/// below 0.05. When ρ̂_1 < 0.05 already, S = 0 and the result is N.
/// ρ̂ is averaged over all chains, so a single chain reproduces the one-series formula.
EssEstimate effective_sample_size(const ChainSeries& chains, double ref_mean, double ref_var);
double ess(std::span<const double> series, double ref_mean, double ref_var);

inline constexpr double kAutocorrelationCutoff = 0.05;

struct EssReport {
  std::vector<std::string> quantities;  // "x0", "x1", ... or "summary"
  std::vector<double> per_quantity;
  std::vector<std::size_t> truncation_lags;
  double min_ess = 0.0;
  double ess_per_second = 0.0;
  ReferenceMoments reference;
  std::size_t n_chains = 0;
  std::size_t n_steps = 0;
};

/// Min-over-coordinates ESS, or the ESS of the summary statistic when the
/// target defines one. Reference moments must match that choice.
EssReport ess_report(const ChainDump& dump, const EnergyTarget& target,
                     const ReferenceMoments& reference);

/// Aggregate throughput: min_ess × n_chains / wall_time.
double ess_per_second(const EssReport& report, double wall_time_seconds);

/// Moments of each coordinate (or of the summary statistic) over [n, dim] draws.
ReferenceMoments moments_of(const Tensor& draws, const EnergyTarget& target, std::string source);

struct RhatReport {
  std::string statistic;
  std::vector<double> chain_means;
  std::vector<double> chain_variances;
  double within = 0.0;
  double between = 0.0;
  double rhat = 0.0;
  bool degenerate = false;
};

/// Gelman-Rubin potential scale reduction factor.
RhatReport rhat(const ChainSeries& chains, std::string statistic = "x");

enum class Estimator { Mean, Std };

struct ErrorPoint {
  std::size_t length = 0;
  double mae = 0.0;
};

/// Mean absolute error, averaged over chains, of the running estimate from
/// each chain's first `length` samples. Evaluated at every length in `lengths`
/// (all lengths 1..N when empty).
std::vector<ErrorPoint> error_curve(const ChainSeries& chains, double truth, Estimator estimator,
                                    std::vector<std::size_t> lengths = {});

}  // namespace anicemc
