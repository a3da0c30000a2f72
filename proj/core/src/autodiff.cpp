#include "anicemc/autodiff.hpp"

#include "anicemc/errors.hpp"

#include <cmath>

namespace anicemc {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("value() on an unbound Var");
  return tape_->value(id_);
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::AddBias: return "add_bias";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::MaxScalar: return "max_scalar";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::ColumnMean: return "column_mean";
    case Op::ConcatCols: return "concat_cols";
  }
  return "?";
}

Tensor Gradients::wrt(Var v) const {
  const auto id = v.id();
  if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
  return Tensor(id < shapes_.size() ? shapes_[id] : v.shape());
}

Tensor Gradients::of(const Tensor& param) const {
  auto it = params_.find(&param);
  if (it == params_.end() || grads_[it->second].empty()) return Tensor(param.shape());
  return grads_[it->second];
}

bool Gradients::reached(const Tensor& param) const {
  auto it = params_.find(&param);
  return it != params_.end() && !grads_[it->second].empty();
}

const Tensor& Tape::value(std::size_t id) const {
  const auto& n = nodes_.at(id);
  return n.external ? *n.external : n.value;
}

void Tape::check(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw UsageError("Var does not belong to this tape");
  }
}

Var Tape::push(Op op, Tensor value, std::size_t lhs, std::size_t rhs, double k,
               bool requires_grad) {
  Node n;
  n.op = op;
  n.lhs = lhs;
  n.rhs = rhs;
  n.k = k;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::unary(Op op, Var a, Tensor value, double k) {
  check(a);
  return push(op, std::move(value), a.id(), a.id(), k, nodes_[a.id()].requires_grad);
}

Var Tape::constant(Tensor value) { return push(Op::Leaf, std::move(value), 0, 0, 0.0, false); }

Var Tape::variable(Tensor value) { return push(Op::Leaf, std::move(value), 0, 0, 0.0, true); }

Var Tape::parameter(const Tensor& param) {
  if (auto it = params_.find(&param); it != params_.end()) return Var(this, it->second);
  Node n;
  n.requires_grad = true;
  n.external = &param;
  nodes_.push_back(std::move(n));
  params_.emplace(&param, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::frozen(const Tensor& param) {
  if (auto it = frozen_.find(&param); it != frozen_.end()) return Var(this, it->second);
  Node n;
  n.external = &param;
  nodes_.push_back(std::move(n));
  frozen_.emplace(&param, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

namespace {

template <class F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

void accumulate(Tensor& slot, Tensor g) {
  if (slot.size() == 0) {
    slot = std::move(g);
    return;
  }
  auto dst = slot.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const auto& av = value(a.id());
  const auto& bv = value(b.id());
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ConfigError("matmul: inner dimensions differ " + shape_to_string(av.shape()) + " x " +
                      shape_to_string(bv.shape()));
  }
  Tensor out(Shape{av.rows(), bv.cols()});
  out.mat().noalias() = av.mat() * bv.mat();
  return push(Op::MatMul, std::move(out), a.id(), b.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad);
}

Var Tape::add_bias(Var a, Var bias) {
  check(a);
  check(bias);
  const auto& av = value(a.id());
  const auto& bv = value(bias.id());
  require_matrix(av, "add_bias");
  const bool row_shaped = bv.rank() == 1 || (bv.rank() == 2 && bv.rows() == 1);
  if (!row_shaped || bv.size() != av.cols()) {
    throw ConfigError("add_bias: bias " + shape_to_string(bv.shape()) + " does not match " +
                      shape_to_string(av.shape()));
  }
  Tensor out = av;
  out.mat().rowwise() += bv.mat().row(0);
  return push(Op::AddBias, std::move(out), a.id(), bias.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[bias.id()].requires_grad);
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const auto& av = value(a.id());
  const auto& bv = value(b.id());
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(Op::Add, std::move(out), a.id(), b.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad);
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const auto& av = value(a.id());
  const auto& bv = value(b.id());
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return push(Op::Sub, std::move(out), a.id(), b.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad);
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const auto& av = value(a.id());
  const auto& bv = value(b.id());
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(Op::Mul, std::move(out), a.id(), b.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad);
}

Var Tape::scale(Var a, double k) {
  check(a);
  return unary(Op::Scale, a, map_unary(value(a.id()), [k](double x) { return k * x; }), k);
}

Var Tape::add_scalar(Var a, double k) {
  check(a);
  return unary(Op::AddScalar, a, map_unary(value(a.id()), [k](double x) { return x + k; }), k);
}

Var Tape::relu(Var a) {
  check(a);
  return unary(Op::Relu, a, map_unary(value(a.id()), [](double x) { return x > 0.0 ? x : 0.0; }));
}

Var Tape::leaky_relu(Var a, double slope) {
  check(a);
  return unary(Op::LeakyRelu, a,
               map_unary(value(a.id()), [slope](double x) { return x > 0.0 ? x : slope * x; }),
               slope);
}

Var Tape::tanh(Var a) {
  check(a);
  return unary(Op::Tanh, a, map_unary(value(a.id()), [](double x) { return std::tanh(x); }));
}

Var Tape::exp(Var a) {
  check(a);
  return unary(Op::Exp, a, map_unary(value(a.id()), [](double x) { return std::exp(x); }));
}

Var Tape::log(Var a) {
  check(a);
  return unary(Op::Log, a, map_unary(value(a.id()), [](double x) { return std::log(x); }));
}

Var Tape::square(Var a) {
  check(a);
  return unary(Op::Square, a, map_unary(value(a.id()), [](double x) { return x * x; }));
}

Var Tape::sqrt(Var a) {
  check(a);
  return unary(Op::Sqrt, a, map_unary(value(a.id()), [](double x) { return std::sqrt(x); }));
}

Var Tape::abs(Var a) {
  check(a);
  return unary(Op::Abs, a, map_unary(value(a.id()), [](double x) { return std::fabs(x); }));
}

Var Tape::max_scalar(Var a, double k) {
  check(a);
  return unary(Op::MaxScalar, a,
               map_unary(value(a.id()), [k](double x) { return x > k ? x : k; }), k);
}

Var Tape::sum(Var a) {
  check(a);
  double s = 0.0;
  for (double x : value(a.id()).data()) s += x;
  return unary(Op::Sum, a, Tensor::scalar(s));
}

Var Tape::mean(Var a) {
  check(a);
  const auto& av = value(a.id());
  if (av.size() == 0) throw ConfigError("mean of an empty tensor");
  double s = 0.0;
  for (double x : av.data()) s += x;
  return unary(Op::Mean, a, Tensor::scalar(s / static_cast<double>(av.size())));
}

Var Tape::column_mean(Var a) {
  check(a);
  const auto& av = value(a.id());
  require_matrix(av, "column_mean");
  if (av.rows() == 0) throw ConfigError("column_mean of an empty batch");
  Tensor out(Shape{1, av.cols()});
  out.mat() = av.mat().colwise().mean();
  return unary(Op::ColumnMean, a, std::move(out));
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  Tensor out = anicemc::concat_cols(value(a.id()), value(b.id()));
  return push(Op::ConcatCols, std::move(out), a.id(), b.id(), 0.0,
              nodes_[a.id()].requires_grad || nodes_[b.id()].requires_grad);
}

void Tape::backprop_node(std::size_t id, std::vector<Tensor>& grads) const {
  const Node& n = nodes_[id];
  const Tensor& g = grads[id];
  const bool need_l = nodes_[n.lhs].requires_grad;
  const bool need_r = nodes_[n.rhs].requires_grad;

  auto send = [&](std::size_t target, Tensor t) { accumulate(grads[target], std::move(t)); };
  auto elementwise = [&](auto dfdx) {
    const Tensor& x = value(n.lhs);
    const Tensor& y = value(id);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * dfdx(x[i], y[i]);
    send(n.lhs, std::move(out));
  };

  switch (n.op) {
    case Op::Leaf:
      return;
    case Op::MatMul: {
      const Tensor& a = value(n.lhs);
      const Tensor& b = value(n.rhs);
      if (need_l) {
        Tensor da(a.shape());
        da.mat().noalias() = g.mat() * b.mat().transpose();
        send(n.lhs, std::move(da));
      }
      if (need_r) {
        Tensor db(b.shape());
        db.mat().noalias() = a.mat().transpose() * g.mat();
        send(n.rhs, std::move(db));
      }
      return;
    }
    case Op::AddBias: {
      if (need_l) send(n.lhs, g);
      if (need_r) {
        Tensor db(value(n.rhs).shape());
        db.mat().row(0) = g.mat().colwise().sum();
        send(n.rhs, std::move(db));
      }
      return;
    }
    case Op::Add:
      if (need_l) send(n.lhs, g);
      if (need_r) send(n.rhs, g);
      return;
    case Op::Sub:
      if (need_l) send(n.lhs, g);
      if (need_r) send(n.rhs, map_unary(g, [](double x) { return -x; }));
      return;
    case Op::Mul: {
      const Tensor& a = value(n.lhs);
      const Tensor& b = value(n.rhs);
      if (need_l) {
        Tensor da(a.shape());
        for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[i] * b[i];
        send(n.lhs, std::move(da));
      }
      if (need_r) {
        Tensor db(b.shape());
        for (std::size_t i = 0; i < db.size(); ++i) db[i] = g[i] * a[i];
        send(n.rhs, std::move(db));
      }
      return;
    }
    case Op::Scale: {
      const double k = n.k;
      send(n.lhs, map_unary(g, [k](double x) { return k * x; }));
      return;
    }
    case Op::AddScalar:
      send(n.lhs, g);
      return;
    case Op::Relu:
      elementwise([](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
      return;
    case Op::LeakyRelu: {
      const double slope = n.k;
      elementwise([slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
      return;
    }
    case Op::Tanh:
      elementwise([](double, double y) { return 1.0 - y * y; });
      return;
    case Op::Exp:
      elementwise([](double, double y) { return y; });
      return;
    case Op::Log:
      elementwise([](double x, double) { return 1.0 / x; });
      return;
    case Op::Square:
      elementwise([](double x, double) { return 2.0 * x; });
      return;
    case Op::Sqrt:
      elementwise([](double, double y) { return 0.5 / y; });
      return;
    case Op::Abs:
      elementwise([](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
      return;
    case Op::MaxScalar: {
      const double k = n.k;
      elementwise([k](double x, double) { return x > k ? 1.0 : 0.0; });
      return;
    }
    case Op::Sum:
      send(n.lhs, Tensor(value(n.lhs).shape(), g.item()));
      return;
    case Op::Mean: {
      const auto& a = value(n.lhs);
      send(n.lhs, Tensor(a.shape(), g.item() / static_cast<double>(a.size())));
      return;
    }
    case Op::ColumnMean: {
      const auto& a = value(n.lhs);
      Tensor da(a.shape());
      da.mat().rowwise() = g.mat().row(0) / static_cast<double>(a.rows());
      send(n.lhs, std::move(da));
      return;
    }
    case Op::ConcatCols: {
      const auto& a = value(n.lhs);
      const auto& b = value(n.rhs);
      if (need_l) send(n.lhs, Tensor::from_eigen(g.mat().leftCols(a.cols())));
      if (need_r) send(n.rhs, Tensor::from_eigen(g.mat().rightCols(b.cols())));
      return;
    }
  }
}

Gradients Tape::backward(Var root) const {
  if (root.tape() != this || root.id() >= nodes_.size()) {
    throw UsageError("backward: root does not belong to this tape");
  }
  const Tensor& rv = value(root.id());
  if (rv.rank() != 0) {
    throw UsageError("backward: root must be a rank-0 scalar, got shape " +
                     shape_to_string(rv.shape()));
  }

  Gradients out;
  out.grads_.resize(nodes_.size());
  out.shapes_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) out.shapes_.push_back(value(i).shape());
  out.params_ = params_;

  if (!nodes_[root.id()].requires_grad) return out;
  out.grads_[root.id()] = Tensor::scalar(1.0);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || out.grads_[id].size() == 0 || n.op == Op::Leaf) continue;
    backprop_node(id, out.grads_);
  }
  return out;
}

}  // namespace anicemc
