#include "anicemc/logistic.hpp"

#include "anicemc/checkpoint.hpp"
#include "anicemc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace anicemc {

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

namespace {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  std::vector<std::string_view> out;
  if (line.find_first_of(",;") != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto stop = line.find_first_of(",;", start);
      auto field = line.substr(start, stop == std::string_view::npos ? line.size() - start : stop - start);
      while (!field.empty() && is_space(field.front())) field.remove_prefix(1);
      while (!field.empty() && is_space(field.back())) field.remove_suffix(1);
      out.push_back(field);
      if (stop == std::string_view::npos) break;
      start = stop + 1;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row) {
  if (field.empty()) throw IngestionError("empty cell", row);
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw IngestionError("non-numeric cell '" + std::string(field) + "'", row);
  }
  return value;
}

}  // namespace

LogisticRegressionData parse_uci_table(const std::string& text, const CsvSpec& spec) {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (spec.header && line_no == 1) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw IngestionError("expected " + std::to_string(width) + " columns, found " +
                               std::to_string(fields.size()),
                           line_no);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw IngestionError("no data rows", line_no);
  if (width < 2) throw IngestionError("need at least one feature and a label column", line_numbers[0]);

  const int lc = spec.label_column < 0 ? static_cast<int>(width) + spec.label_column : spec.label_column;
  if (lc < 0 || lc >= static_cast<int>(width)) {
    throw IngestionError("label column " + std::to_string(spec.label_column) + " missing from a " +
                             std::to_string(width) + "-column table",
                         line_numbers[0]);
  }
  const auto label_col = static_cast<std::size_t>(lc);

  std::set<double> distinct;
  for (const auto& r : rows) distinct.insert(r[label_col]);
  if (distinct.size() != 2) {
    throw IngestionError("label column must hold exactly two distinct values, found " +
                             std::to_string(distinct.size()),
                         line_numbers[0]);
  }
  const double positive = spec.positive_label.value_or(*distinct.rbegin());
  if (!distinct.contains(positive)) {
    throw IngestionError("positive label value not present in the label column", line_numbers[0]);
  }

  const std::size_t n = rows.size();
  const std::size_t features = width - 1;
  LogisticRegressionData data;
  data.name = spec.name.empty() ? "blr" : spec.name;
  data.covariates = Tensor(Shape{n, features + 1});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_col) continue;
      data.covariates(i, c++) = rows[i][j];
    }
    data.covariates(i, features) = 1.0;
    data.labels[i] = rows[i][label_col] == positive ? 1.0 : 0.0;
  }
  auto m = data.covariates.mat();
  for (std::size_t j = 0; j < features; ++j) {
    auto col = m.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    col.array() -= mean;
    const double var = col.squaredNorm() / static_cast<double>(n);
    // Constant columns stay centred at zero.
    if (var > 0.0) col /= std::sqrt(var);
  }
  return data;
}

LogisticRegressionData load_uci_csv(const std::filesystem::path& path, const CsvSpec& spec) {
  if (!std::filesystem::exists(path)) throw IoError("dataset not found: " + path.string());
  return parse_uci_table(read_file(path), spec);
}

CsvSpec dataset_preset(const std::string& name) {
  // Raw UCI layouts: label in the last column; german and heart use {1, 2},
  // australian uses {0, 1}. In every case the larger value maps to 1.
  if (name == "german" || name == "heart" || name == "australian") {
    CsvSpec spec;
    spec.name = name;
    spec.label_column = -1;
    return spec;
  }
  throw ConfigError("unknown dataset preset '" + name + "'");
}

LogisticRegressionTarget::LogisticRegressionTarget(LogisticRegressionData data, double prior_variance)
    : data_(std::move(data)), prior_variance_(prior_variance) {
  require_matrix(data_.covariates, "LogisticRegressionTarget");
  if (data_.covariates.rows() != data_.labels.size()) {
    throw ConfigError("covariate rows and label count differ");
  }
  if (!(prior_variance_ > 0.0)) throw ConfigError("prior variance must be positive");
}

double LogisticRegressionTarget::negative_log_likelihood(std::span<const double> w) const {
  if (w.size() != dim()) {
    throw ConfigError("blr: weight dimension " + std::to_string(w.size()) + " but data has " +
                      std::to_string(dim()) + " covariates");
  }
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd z = data_.covariates.mat() * wv;
  double nll = 0.0;
  for (Eigen::Index n = 0; n < z.size(); ++n) nll += softplus(z[n]) - data_.labels[n] * z[n];
  return nll;
}

double LogisticRegressionTarget::energy(std::span<const double> w) const {
  double prior = 0.0;
  for (double x : w) prior += x * x;
  return negative_log_likelihood(w) + prior / (2.0 * prior_variance_);
}

void LogisticRegressionTarget::gradient(std::span<const double> w, std::span<double> grad) const {
  if (w.size() != dim() || grad.size() != dim()) throw ConfigError("blr: gradient dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd r = data_.covariates.mat() * wv;
  for (Eigen::Index n = 0; n < r.size(); ++n) r[n] = sigmoid(r[n]) - data_.labels[n];
  Eigen::Map<Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(grad.size()));
  g.noalias() = data_.covariates.mat().transpose() * r;
  g += wv / prior_variance_;
}

void LogisticRegressionTarget::energy_batch(const Tensor& w, std::span<double> out) const {
  check_batch(w);
  if (out.size() != w.rows()) throw ConfigError("energy_batch: output size mismatch");
  // Z[b, n] = w_b · x_n
  const MatrixRM z = w.mat() * data_.covariates.mat().transpose();
  for (Eigen::Index b = 0; b < z.rows(); ++b) {
    double u = 0.0;
    for (Eigen::Index n = 0; n < z.cols(); ++n) u += softplus(z(b, n)) - data_.labels[n] * z(b, n);
    out[b] = u + w.mat().row(b).squaredNorm() / (2.0 * prior_variance_);
  }
}

void LogisticRegressionTarget::gradient_batch(const Tensor& w, Tensor& grad) const {
  check_batch(w);
  if (grad.shape() != w.shape()) grad = Tensor(w.shape());
  MatrixRM r = w.mat() * data_.covariates.mat().transpose();
  for (Eigen::Index b = 0; b < r.rows(); ++b) {
    for (Eigen::Index n = 0; n < r.cols(); ++n) r(b, n) = sigmoid(r(b, n)) - data_.labels[n];
  }
  grad.mat().noalias() = r * data_.covariates.mat();
  grad.mat() += w.mat() / prior_variance_;
}

}  // namespace anicemc
