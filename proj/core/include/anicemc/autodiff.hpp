#pragma once

#include "anicemc/tensor.hpp"

#include <cstddef>
#include <unordered_map>
#include <vector>

namespace anicemc {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Op {
  Leaf,
  MatMul,
  AddBias,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Relu,
  LeakyRelu,
  Tanh,
  Exp,
  Log,
  Square,
  Sqrt,
  Abs,
  MaxScalar,
  Sum,
  Mean,
  ColumnMean,
  ConcatCols,
};

const char* op_name(Op op);

/// Gradients produced by one backward pass, indexed by tape node.
class Gradients {
 public:
  /// Gradient with respect to any recorded node. Zero-filled when no path reached it.
  Tensor wrt(Var v) const;
  /// Gradient with respect to an externally owned parameter bound with Tape::parameter.
  Tensor of(const Tensor& param) const;
  bool reached(const Tensor& param) const;

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<Shape> shapes_;
  std::unordered_map<const Tensor*, std::size_t> params_;
};

/// Reverse-mode computation tape. Nodes are appended in evaluation order, so
/// every operand precedes its consumer and backward is a single reverse sweep.
///
/// Parameter leaves alias external storage: the bound tensors must outlive the
/// tape and must not be modified between recording and backward().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that never receives gradient.
  Var constant(Tensor value);
  /// A leaf whose gradient is reported by backward().
  Var variable(Tensor value);
  /// Binds an external parameter. Repeated calls with the same tensor return the same leaf.
  Var parameter(const Tensor& param);
  /// Binds an external tensor that never receives gradient.
  Var frozen(const Tensor& param);

  Var matmul(Var a, Var b);
  /// a[n,m] + bias broadcast over rows; bias has shape [m] or [1,m].
  Var add_bias(Var a, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var add_scalar(Var a, double k);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  Var abs(Var a);
  /// max(a, k) elementwise; gradient passes only where a > k.
  Var max_scalar(Var a, double k);
  /// Sum of all elements, rank-0 result.
  Var sum(Var a);
  /// Mean of all elements, rank-0 result.
  Var mean(Var a);
  /// Mean over rows of a[n,m], result [1,m].
  Var column_mean(Var a);
  Var concat_cols(Var a, Var b);

  /// Reverse sweep from a rank-0 node. Throws UsageError for any other root.
  Gradients backward(Var root) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(std::size_t id) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double k = 0.0;
    bool requires_grad = false;
    Tensor value;
    const Tensor* external = nullptr;
  };

  Var push(Op op, Tensor value, std::size_t lhs, std::size_t rhs, double k, bool requires_grad);
  Var unary(Op op, Var a, Tensor value, double k = 0.0);
  void check(Var v) const;
  void backprop_node(std::size_t id, std::vector<Tensor>& grads) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> params_;
  std::unordered_map<const Tensor*, std::size_t> frozen_;
};

// Operator sugar for tape expressions.
inline Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var operator*(Var a, double k) { return a.tape()->scale(a, k); }
inline Var operator*(double k, Var a) { return a.tape()->scale(a, k); }
inline Var operator+(Var a, double k) { return a.tape()->add_scalar(a, k); }
inline Var operator-(Var a) { return a.tape()->scale(a, -1.0); }

}  // namespace anicemc
