#pragma once

#include "anicemc/targets.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anicemc {

/// Standardized design matrix with a trailing bias column, plus 0/1 labels.
struct LogisticRegressionData {
  std::string name;
  Tensor covariates;           // [N, d], column d-1 is all ones
  std::vector<double> labels;  // N entries in {0, 1}

  std::size_t rows() const { return labels.size(); }
  std::size_t covariate_count() const { return covariates.rank() == 2 ? covariates.cols() : 0; }
};

/// How to read a UCI-style numeric table.
struct CsvSpec {
  std::string name;
  /// Zero-based label column; negative counts from the end (-1 = last).
  int label_column = -1;
  /// Raw label value mapped to 1. When unset, the larger of the two distinct
  /// values maps to 1 and the smaller to 0.
  std::optional<double> positive_label;
  /// Skip the first line.
  bool header = false;
};

/// Parses comma-, semicolon- or whitespace-separated numeric rows, standardizes
/// every feature column to zero mean and unit variance, appends a bias column
/// of ones and maps labels to {0, 1}. Errors carry the 1-based line number.
LogisticRegressionData load_uci_csv(const std::filesystem::path& path, const CsvSpec& spec);
LogisticRegressionData parse_uci_table(const std::string& text, const CsvSpec& spec);

/// Label conventions for the shipped dataset presets: german, heart, australian.
CsvSpec dataset_preset(const std::string& name);

/// Default isotropic prior variance on the regression weights.
inline constexpr double kBlrPriorVariance = 100.0;

/// Posterior of Bayesian logistic regression with an isotropic Gaussian prior:
/// U(w) = Σ_n [softplus(wᵀx_n) - y_n wᵀx_n] + |w|² / (2α).
class LogisticRegressionTarget final : public EnergyTarget {
 public:
  explicit LogisticRegressionTarget(LogisticRegressionData data,
                                    double prior_variance = kBlrPriorVariance);

  std::string name() const override { return data_.name; }
  std::size_t dim() const override { return data_.covariate_count(); }
  double energy(std::span<const double> w) const override;
  void gradient(std::span<const double> w, std::span<double> grad) const override;
  void energy_batch(const Tensor& w, std::span<double> out) const override;
  void gradient_batch(const Tensor& w, Tensor& grad) const override;

  const LogisticRegressionData& data() const { return data_; }
  double prior_variance() const { return prior_variance_; }
  /// Σ_n [softplus(wᵀx_n) - y_n wᵀx_n], without the prior term.
  double negative_log_likelihood(std::span<const double> w) const;

 private:
  LogisticRegressionData data_;
  double prior_variance_;
};

/// log(1 + e^z) without overflow.
double softplus(double z) noexcept;

}  // namespace anicemc
