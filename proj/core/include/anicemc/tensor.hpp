#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace anicemc {

using Shape = std::vector<std::size_t>;
/// Storage aligned for Eigen's widest packets so reductions do not depend on addresses.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<MatrixRM>;
using ConstMatrixMap = Eigen::Map<const MatrixRM>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of doubles. Rank 0 is a scalar, rank 2 is the
/// usual [batch, features] layout used throughout the library.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, Storage data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor from_eigen(const Eigen::Ref<const MatrixRM>& m);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Leading dimension of a rank-2 tensor.
  std::size_t rows() const;
  /// Trailing dimension of a rank-2 tensor.
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  Storage& storage() noexcept { return data_; }
  const Storage& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  /// The single element of a size-1 tensor.
  double item() const;

  /// Views a rank-2 tensor (or a vector as a 1-row matrix) as an Eigen matrix.
  MatrixMap mat();
  ConstMatrixMap mat() const;

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Storage data_;
};

/// Throws ConfigError unless both shapes are identical.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);
/// Throws ConfigError unless t has rank 2.
void require_matrix(const Tensor& t, const char* op);

/// Concatenates two rank-2 tensors with equal row counts along columns.
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Rows of `src` at `indices`, in order.
Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices);

}  // namespace anicemc
