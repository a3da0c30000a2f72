#include "anicemc/targets.hpp"

#include "anicemc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace anicemc {

void EnergyTarget::check_batch(const Tensor& x) const {
  require_matrix(x, "energy_batch");
  if (x.cols() != dim()) {
    throw ConfigError(name() + ": state width " + std::to_string(x.cols()) +
                      " but target dimension is " + std::to_string(dim()));
  }
}

void EnergyTarget::energy_batch(const Tensor& x, std::span<double> out) const {
  check_batch(x);
  if (out.size() != x.rows()) throw ConfigError("energy_batch: output size mismatch");
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = energy(x.row(i));
}

void EnergyTarget::gradient_batch(const Tensor& x, Tensor& grad) const {
  check_batch(x);
  if (grad.shape() != x.shape()) grad = Tensor(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) gradient(x.row(i), grad.row(i));
}

double EnergyTarget::summary(std::span<const double>) const {
  throw UsageError(name() + " defines no summary statistic");
}

std::vector<double> EnergyTarget::energies(const Tensor& x) const {
  std::vector<double> out(x.rank() == 2 ? x.rows() : 0);
  energy_batch(x, out);
  return out;
}

// ring

double RingTarget::energy(std::span<const double> x) const {
  const double r = std::hypot(x[0], x[1]);
  return (r - 2.0) * (r - 2.0) / 0.32;
}

void RingTarget::gradient(std::span<const double> x, std::span<double> grad) const {
  const double r = std::hypot(x[0], x[1]);
  if (r == 0.0) {
    grad[0] = grad[1] = 0.0;
    return;
  }
  const double dr = 2.0 * (r - 2.0) / 0.32;
  grad[0] = dr * x[0] / r;
  grad[1] = dr * x[1] / r;
}

SamplingBox RingTarget::sampling_box() const { return {{-4.5, -4.5}, {4.5, 4.5}, 0.0}; }

// ring5

namespace {

constexpr int kRing5Count = 5;
constexpr double kRing5Scale = 0.04;

std::pair<int, double> ring5_argmin(double r) {
  int best = 1;
  double best_u = (r - 1.0) * (r - 1.0) / kRing5Scale;
  for (int i = 2; i <= kRing5Count; ++i) {
    const double u = (r - i) * (r - i) / kRing5Scale;
    if (u < best_u) {
      best = i;
      best_u = u;
    }
  }
  return {best, best_u};
}

}  // namespace

double Ring5Target::energy(std::span<const double> x) const {
  return ring5_argmin(std::hypot(x[0], x[1])).second;
}

void Ring5Target::gradient(std::span<const double> x, std::span<double> grad) const {
  const double r = std::hypot(x[0], x[1]);
  if (r == 0.0) {
    grad[0] = grad[1] = 0.0;
    return;
  }
  const int i = ring5_argmin(r).first;
  const double dr = 2.0 * (r - i) / kRing5Scale;
  grad[0] = dr * x[0] / r;
  grad[1] = dr * x[1] / r;
}

SamplingBox Ring5Target::sampling_box() const { return {{-6.0, -6.0}, {6.0, 6.0}, 0.0}; }

double Ring5Target::summary(std::span<const double> x) const { return std::hypot(x[0], x[1]); }

// mixtures

MixtureTarget::MixtureTarget(std::string name, std::vector<GaussianComponent> components,
                             bool literal_sum)
    : name_(std::move(name)), components_(std::move(components)), literal_sum_(literal_sum) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  for (const auto& c : components_) {
    if (!(c.stddev[0] > 0.0 && c.stddev[1] > 0.0)) {
      throw ConfigError("mixture component standard deviations must be positive");
    }
  }
  // Lower bound on U inside the sampling box: grid minimum and every mean,
  // less a margin covering the grid spacing.
  const auto box = sampling_box();
  double lowest = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 400;
  for (int i = 0; i <= kGrid; ++i) {
    for (int j = 0; j <= kGrid; ++j) {
      const double p[2] = {box.lo[0] + (box.hi[0] - box.lo[0]) * i / kGrid,
                           box.lo[1] + (box.hi[1] - box.lo[1]) * j / kGrid};
      lowest = std::min(lowest, energy(p));
    }
  }
  for (const auto& c : components_) lowest = std::min(lowest, energy(c.mean));
  energy_floor_ = lowest - 0.05;
}

double MixtureTarget::log_pdf(std::size_t i, std::span<const double> x) const {
  const auto& c = components_[i];
  double acc = -std::log(2.0 * std::numbers::pi);
  for (int d = 0; d < 2; ++d) {
    const double z = (x[d] - c.mean[d]) / c.stddev[d];
    acc += -0.5 * z * z - std::log(c.stddev[d]);
  }
  return acc;
}

double MixtureTarget::energy(std::span<const double> x) const {
  const double log_k = std::log(static_cast<double>(components_.size()));
  if (literal_sum_) {
    double s = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) s += log_pdf(i, x);
    return s - log_k;
  }
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    lp[i] = log_pdf(i, x);
    hi = std::max(hi, lp[i]);
  }
  double s = 0.0;
  for (double v : lp) s += std::exp(v - hi);
  return -(hi + std::log(s)) + log_k;
}

void MixtureTarget::gradient(std::span<const double> x, std::span<double> grad) const {
  grad[0] = grad[1] = 0.0;
  if (literal_sum_) {
    for (const auto& c : components_) {
      for (int d = 0; d < 2; ++d) {
        grad[d] -= (x[d] - c.mean[d]) / (c.stddev[d] * c.stddev[d]);
      }
    }
    return;
  }
  // ∇U = Σ_i w_i (x - μ_i) / σ_i², w = softmax(log pdf).
  std::vector<double> lp(components_.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    lp[i] = log_pdf(i, x);
    hi = std::max(hi, lp[i]);
  }
  double total = 0.0;
  for (auto& v : lp) {
    v = std::exp(v - hi);
    total += v;
  }
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const double w = lp[i] / total;
    for (int d = 0; d < 2; ++d) grad[d] += w * (x[d] - c.mean[d]) / (c.stddev[d] * c.stddev[d]);
  }
}

SamplingBox MixtureTarget::sampling_box() const {
  SamplingBox box;
  box.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  box.hi = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : components_) {
    for (int d = 0; d < 2; ++d) {
      box.lo[d] = std::min(box.lo[d], c.mean[d] - 7.0 * c.stddev[d]);
      box.hi[d] = std::max(box.hi[d], c.mean[d] + 7.0 * c.stddev[d]);
    }
  }
  box.energy_floor = energy_floor_;
  return box;
}

std::unique_ptr<MixtureTarget> make_mog2(bool literal_sum) {
  std::vector<GaussianComponent> comps{{{5.0, 0.0}, {0.5, 0.5}}, {{-5.0, 0.0}, {0.5, 0.5}}};
  return std::make_unique<MixtureTarget>("mog2", std::move(comps), literal_sum);
}

std::unique_ptr<MixtureTarget> make_mog6(double radius, bool literal_sum) {
  if (!(radius > 0.0)) throw ConfigError("mog6 radius must be positive");
  std::vector<GaussianComponent> comps;
  for (int i = 1; i <= 6; ++i) {
    const double a = i * std::numbers::pi / 3.0;
    comps.push_back({{radius * std::sin(a), radius * std::cos(a)}, {0.5, 0.5}});
  }
  return std::make_unique<MixtureTarget>("mog6", std::move(comps), literal_sum);
}

std::unique_ptr<AnalyticTarget> make_analytic_target(std::string_view name,
                                                     const AnalyticOptions& options) {
  if (name == "ring") return std::make_unique<RingTarget>();
  if (name == "ring5") return std::make_unique<Ring5Target>();
  if (name == "mog2") return make_mog2(options.mog_literal_sum);
  if (name == "mog6") return make_mog6(options.mog6_radius, options.mog_literal_sum);
  throw ConfigError("unknown analytic target '" + std::string(name) + "'");
}

Tensor rejection_sample(const AnalyticTarget& target, std::size_t n, StreamRng& rng) {
  const auto box = target.sampling_box();
  Tensor out(Shape{n, 2});
  std::size_t filled = 0;
  while (filled < n) {
    const double p[2] = {box.lo[0] + (box.hi[0] - box.lo[0]) * rng.uniform(),
                         box.lo[1] + (box.hi[1] - box.lo[1]) * rng.uniform()};
    const double u = target.energy(p);
    if (u < box.energy_floor) {
      throw NumericError(target.name() + ": energy below the rejection-sampling floor");
    }
    if (rng.uniform() < std::exp(box.energy_floor - u)) {
      out(filled, 0) = p[0];
      out(filled, 1) = p[1];
      ++filled;
    }
  }
  return out;
}

std::optional<std::vector<double>> summary_per_row(const EnergyTarget& target, const Tensor& x) {
  if (!target.has_summary()) return std::nullopt;
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = target.summary(x.row(i));
  return out;
}

}  // namespace anicemc
