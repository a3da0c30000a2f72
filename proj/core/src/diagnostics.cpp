#include "anicemc/diagnostics.hpp"

#include "anicemc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anicemc {

double autocorrelation(std::span<const double> series, double ref_mean, double ref_var,
                       std::size_t lag) {
  if (!(ref_var > 0.0)) throw ConfigError("autocorrelation: reference variance must be positive");
  const std::size_t n = series.size();
  if (lag >= n) throw ConfigError("autocorrelation: lag must be below the series length");
  double acc = 0.0;
  for (std::size_t i = lag; i < n; ++i) acc += (series[i] - ref_mean) * (series[i - lag] - ref_mean);
  return acc / (ref_var * static_cast<double>(n - lag));
}

double pooled_autocorrelation(const ChainSeries& chains, double ref_mean, double ref_var,
                              std::size_t lag) {
  if (chains.empty()) throw ConfigError("pooled_autocorrelation: no chains");
  double acc = 0.0;
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw ConfigError("chains differ in length");
    acc += autocorrelation(c, ref_mean, ref_var, lag);
  }
  return acc / static_cast<double>(chains.size());
}

EssEstimate effective_sample_size(const ChainSeries& chains, double ref_mean, double ref_var) {
  if (chains.empty()) throw ConfigError("ess: no chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw ConfigError("ess: need at least 10 samples per chain");
  const double nd = static_cast<double>(n);
  double tail = 0.0;
  std::size_t lag = 1;
  for (; lag < n; ++lag) {
    const double rho = pooled_autocorrelation(chains, ref_mean, ref_var, lag);
    if (rho < kAutocorrelationCutoff) break;
    tail += (1.0 - static_cast<double>(lag) / nd) * rho;
  }
  return {nd / (1.0 + 2.0 * tail), lag - 1};
}

double ess(std::span<const double> series, double ref_mean, double ref_var) {
  ChainSeries one{std::vector<double>(series.begin(), series.end())};
  return effective_sample_size(one, ref_mean, ref_var).ess;
}

EssReport ess_report(const ChainDump& dump, const EnergyTarget& target,
                     const ReferenceMoments& reference) {
  EssReport r;
  r.reference = reference;
  r.n_chains = dump.n_chains;
  r.n_steps = dump.n_steps;
  const bool use_summary = target.has_summary();
  const std::size_t q = use_summary ? 1 : dump.dim;
  if (reference.mean.size() != q || reference.variance.size() != q) {
    throw ConfigError("ess_report: reference moments cover " + std::to_string(reference.mean.size()) +
                      " quantities, expected " + std::to_string(q));
  }
  r.min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < q; ++j) {
    const auto series = use_summary ? dump.statistic(target) : dump.coordinate(j);
    const auto est = effective_sample_size(series, reference.mean[j], reference.variance[j]);
    r.quantities.push_back(use_summary ? "summary" : "x" + std::to_string(j));
    r.per_quantity.push_back(est.ess);
    r.truncation_lags.push_back(est.truncation_lag);
    r.min_ess = std::min(r.min_ess, est.ess);
  }
  if (dump.wall_time_seconds > 0.0) r.ess_per_second = ess_per_second(r, dump.wall_time_seconds);
  return r;
}

double ess_per_second(const EssReport& report, double wall_time_seconds) {
  if (!(wall_time_seconds > 0.0)) throw ConfigError("ess_per_second: wall time must be positive");
  return report.min_ess * static_cast<double>(report.n_chains) / wall_time_seconds;
}

ReferenceMoments moments_of(const Tensor& draws, const EnergyTarget& target, std::string source) {
  require_matrix(draws, "moments_of");
  if (draws.rows() < 2) throw ConfigError("moments_of: need at least two draws");
  ReferenceMoments m;
  m.source = std::move(source);
  auto push = [&m](const Eigen::Ref<const Eigen::VectorXd>& col) {
    const double mean = col.mean();
    m.mean.push_back(mean);
    m.variance.push_back((col.array() - mean).square().sum() / static_cast<double>(col.size()));
  };
  if (target.has_summary()) {
    Eigen::VectorXd s(draws.rows());
    for (std::size_t i = 0; i < draws.rows(); ++i) s[static_cast<Eigen::Index>(i)] = target.summary(draws.row(i));
    push(s);
  } else {
    for (std::size_t j = 0; j < draws.cols(); ++j) push(draws.mat().col(static_cast<Eigen::Index>(j)));
  }
  return m;
}

RhatReport rhat(const ChainSeries& chains, std::string statistic) {
  if (chains.size() < 2) throw ConfigError("rhat: need at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw ConfigError("rhat: need at least 10 steps per chain");
  RhatReport r;
  r.statistic = std::move(statistic);
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("rhat: chains differ in length");
    double mean = 0.0;
    for (double x : c) mean += x;
    mean /= nd;
    double var = 0.0;
    for (double x : c) var += (x - mean) * (x - mean);
    var /= nd - 1.0;
    r.chain_means.push_back(mean);
    r.chain_variances.push_back(var);
  }
  double grand = 0.0;
  for (double mu : r.chain_means) grand += mu;
  grand /= m;
  double b = 0.0;
  for (double mu : r.chain_means) b += (mu - grand) * (mu - grand);
  r.between = nd * b / (m - 1.0);
  double w = 0.0;
  for (double v : r.chain_variances) w += v;
  r.within = w / m;
  const double pooled = (nd - 1.0) / nd * r.within + r.between / nd;
  if (!(r.within > 0.0)) {
    r.degenerate = true;
    r.rhat = r.between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return r;
  }
  r.rhat = std::sqrt(pooled / r.within);
  return r;
}

std::vector<ErrorPoint> error_curve(const ChainSeries& chains, double truth, Estimator estimator,
                                    std::vector<std::size_t> lengths) {
  if (chains.empty()) return {};
  const std::size_t n = chains.front().size();
  if (lengths.empty()) {
    lengths.resize(n);
    for (std::size_t i = 0; i < n; ++i) lengths[i] = i + 1;
  }
  for (auto l : lengths) {
    if (l == 0 || l > n) throw ConfigError("error_curve: length outside 1..N");
  }
  std::sort(lengths.begin(), lengths.end());
  std::vector<ErrorPoint> out(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) out[k].length = lengths[k];

  for (const auto& c : chains) {
    if (c.size() != n) throw ConfigError("error_curve: chains differ in length");
    // Welford running moments, sampled at the requested prefix lengths.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (std::size_t t = 0; t < n && k < lengths.size(); ++t) {
      const double delta = c[t] - mean;
      mean += delta / static_cast<double>(t + 1);
      m2 += delta * (c[t] - mean);
      while (k < lengths.size() && lengths[k] == t + 1) {
        const double est = estimator == Estimator::Mean
                               ? mean
                               : std::sqrt(std::max(0.0, m2 / static_cast<double>(t + 1)));
        out[k].mae += std::fabs(est - truth);
        ++k;
      }
    }
  }
  for (auto& p : out) p.mae /= static_cast<double>(chains.size());
  return out;
}

}  // namespace anicemc
