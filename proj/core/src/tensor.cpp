#include "anicemc/tensor.hpp"

#include "anicemc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anicemc {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_numel(shape_) != data_.size()) {
    throw ConfigError("tensor shape " + shape_to_string(shape_) + " holds " +
                      std::to_string(shape_numel(shape_)) + " elements but " +
                      std::to_string(data_.size()) + " were supplied");
  }
}

Tensor::Tensor(Shape shape, Storage data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw ConfigError("tensor shape " + shape_to_string(shape_) + " holds " +
                      std::to_string(shape_numel(shape_)) + " elements but " +
                      std::to_string(data_.size()) + " were supplied");
  }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ConfigError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

Tensor Tensor::from_eigen(const Eigen::Ref<const MatrixRM>& m) {
  Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  t.mat() = m;
  return t;
}

std::size_t Tensor::rows() const {
  require_matrix(*this, "rows");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  require_matrix(*this, "cols");
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw UsageError("item() on tensor of shape " + shape_to_string(shape_));
  }
  return data_[0];
}

MatrixMap Tensor::mat() {
  if (rank() == 2) return MatrixMap(data_.data(), shape_[0], shape_[1]);
  if (rank() == 1) return MatrixMap(data_.data(), 1, shape_[0]);
  if (rank() == 0) return MatrixMap(data_.data(), 1, 1);
  throw ConfigError("mat() needs rank <= 2, got " + shape_to_string(shape_));
}

ConstMatrixMap Tensor::mat() const {
  if (rank() == 2) return ConstMatrixMap(data_.data(), shape_[0], shape_[1]);
  if (rank() == 1) return ConstMatrixMap(data_.data(), 1, shape_[0]);
  if (rank() == 0) return ConstMatrixMap(data_.data(), 1, 1);
  throw ConfigError("mat() needs rank <= 2, got " + shape_to_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                      " vs " + shape_to_string(b.shape()));
  }
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ConfigError(std::string(op) + ": expected rank-2 tensor, got " +
                      shape_to_string(t.shape()));
  }
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ConfigError("concat_cols: row mismatch " + shape_to_string(a.shape()) + " vs " +
                      shape_to_string(b.shape()));
  }
  Tensor out(Shape{a.rows(), a.cols() + b.cols()});
  out.mat().leftCols(a.cols()) = a.mat();
  out.mat().rightCols(b.cols()) = b.mat();
  return out;
}

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices) {
  require_matrix(src, "gather_rows");
  const auto c = src.cols();
  Tensor out(Shape{indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= src.rows()) throw ConfigError("gather_rows: index out of range");
    std::copy_n(src.row(indices[i]).begin(), c, out.row(i).begin());
  }
  return out;
}

}  // namespace anicemc
