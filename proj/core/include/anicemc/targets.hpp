#pragma once

#include "anicemc/rng.hpp"
#include "anicemc/tensor.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anicemc {

/// Unnormalized target p(x) ∝ exp(-U(x)).
///
/// Implementations are immutable after construction and safe to evaluate
/// concurrently from many chains.
class EnergyTarget {
 public:
  virtual ~EnergyTarget() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;

  virtual double energy(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> grad) const = 0;

  /// Row-wise U over x[n, dim].
  virtual void energy_batch(const Tensor& x, std::span<double> out) const;
  /// Row-wise ∇U over x[n, dim]; `grad` is resized to x's shape.
  virtual void gradient_batch(const Tensor& x, Tensor& grad) const;

  /// Scalar statistic used for ESS and R-hat instead of raw coordinates.
  virtual bool has_summary() const { return false; }
  virtual double summary(std::span<const double> x) const;

  std::vector<double> energies(const Tensor& x) const;

 protected:
  void check_batch(const Tensor& x) const;
};

/// Axis-aligned box holding essentially all of a 2D target's mass, plus a
/// lower bound on U inside it. Used for rejection sampling.
struct SamplingBox {
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
  double energy_floor = 0.0;
};

/// A 2D analytic energy that can be sampled exactly by rejection.
class AnalyticTarget : public EnergyTarget {
 public:
  std::size_t dim() const override { return 2; }
  virtual SamplingBox sampling_box() const = 0;
};

/// U(x) = (|x| - 2)^2 / 0.32.
class RingTarget final : public AnalyticTarget {
 public:
  std::string name() const override { return "ring"; }
  double energy(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;
  SamplingBox sampling_box() const override;
};

/// U(x) = min_i (|x| - i)^2 / 0.04 for i = 1..5. Gradient follows the lowest
/// index attaining the minimum. Summary statistic: distance to the origin.
class Ring5Target final : public AnalyticTarget {
 public:
  std::string name() const override { return "ring5"; }
  double energy(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;
  SamplingBox sampling_box() const override;
  bool has_summary() const override { return true; }
  double summary(std::span<const double> x) const override;
};

struct GaussianComponent {
  std::array<double, 2> mean{};
  std::array<double, 2> stddev{0.5, 0.5};
};

/// Equal-weight Gaussian mixture, U(x) = -log((1/K) Σ_i N(x | μ_i, σ_i²)).
///
/// With `literal_sum` set, U(x) = Σ_i log N(x | μ_i, σ_i²) - log K instead,
/// which is kept only for side-by-side comparison.
class MixtureTarget final : public AnalyticTarget {
 public:
  MixtureTarget(std::string name, std::vector<GaussianComponent> components,
                bool literal_sum = false);

  std::string name() const override { return name_; }
  double energy(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> grad) const override;
  SamplingBox sampling_box() const override;

  const std::vector<GaussianComponent>& components() const { return components_; }
  bool literal_sum() const { return literal_sum_; }

 private:
  double log_pdf(std::size_t i, std::span<const double> x) const;

  std::string name_;
  std::vector<GaussianComponent> components_;
  bool literal_sum_;
  double energy_floor_ = 0.0;
};

/// Default distance of the mog6 component means from the origin.
inline constexpr double kMog6DefaultRadius = 5.0;

struct AnalyticOptions {
  bool mog_literal_sum = false;
  double mog6_radius = kMog6DefaultRadius;
};

/// mog2: means (±5, 0); mog6: means r·(sin iπ/3, cos iπ/3), i = 1..6. σ = 0.5 throughout.
std::unique_ptr<MixtureTarget> make_mog2(bool literal_sum = false);
std::unique_ptr<MixtureTarget> make_mog6(double radius = kMog6DefaultRadius, bool literal_sum = false);

/// "ring", "mog2", "mog6" or "ring5". Throws ConfigError for anything else.
std::unique_ptr<AnalyticTarget> make_analytic_target(std::string_view name,
                                                     const AnalyticOptions& options = {});

/// Exact i.i.d. draws from a 2D analytic target, returned as [n, 2].
Tensor rejection_sample(const AnalyticTarget& target, std::size_t n, StreamRng& rng);

/// Summary statistic per row if the target defines one, else nullopt.
std::optional<std::vector<double>> summary_per_row(const EnergyTarget& target, const Tensor& x);

}  // namespace anicemc
