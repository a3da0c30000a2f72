#include "anicemc/mlp.hpp"

#include "anicemc/errors.hpp"

#include <cmath>

namespace anicemc {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "lrelu";
    case Activation::Tanh: return "tanh";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "relu") return Activation::Relu;
  if (name == "lrelu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

void Mlp::validate() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.out_dim()) {
      throw ConfigError("layer " + std::to_string(i) + ": weight " +
                        shape_to_string(l.weight.shape()) + " and bias " +
                        shape_to_string(l.bias.shape()) + " are inconsistent");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw ConfigError("layer " + std::to_string(i) + " expects " +
                        std::to_string(l.in_dim()) + " inputs but previous layer emits " +
                        std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

namespace {

std::vector<std::size_t> widths(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                                std::size_t out_dim) {
  std::vector<std::size_t> w{in_dim};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out_dim);
  return w;
}

void apply_activation(MatrixMap m, Activation act) {
  switch (act) {
    case Activation::Linear:
      return;
    case Activation::Relu:
      m = m.cwiseMax(0.0);
      return;
    case Activation::LeakyRelu:
      m = m.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
      return;
    case Activation::Tanh:
      m = m.array().tanh().matrix();
      return;
  }
}

}  // namespace

Mlp Mlp::xavier(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim,
                Activation hidden_act, std::mt19937_64& rng) {
  const auto w = widths(in_dim, hidden, out_dim);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w[i] + w[i + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l;
    l.weight = Tensor(Shape{w[i], w[i + 1]});
    for (auto& x : l.weight.data()) x = dist(rng);
    l.bias = Tensor(Shape{w[i + 1]});
    l.activation = (i + 2 == w.size()) ? Activation::Linear : hidden_act;
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::zeros(std::size_t in_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim,
               Activation hidden_act) {
  const auto w = widths(in_dim, hidden, out_dim);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    DenseLayer l;
    l.weight = Tensor(Shape{w[i], w[i + 1]});
    l.bias = Tensor(Shape{w[i + 1]});
    l.activation = (i + 2 == w.size()) ? Activation::Linear : hidden_act;
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }

std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

Tensor Mlp::evaluate(const Tensor& input) const {
  require_matrix(input, "Mlp::evaluate");
  if (input.cols() != in_dim()) {
    throw ConfigError("Mlp::evaluate: input width " + std::to_string(input.cols()) +
                      " but network expects " + std::to_string(in_dim()));
  }
  Tensor h = input;
  for (const auto& l : layers_) {
    Tensor next(Shape{h.rows(), l.out_dim()});
    next.mat().noalias() = h.mat() * l.weight.mat();
    next.mat().rowwise() += l.bias.mat().row(0);
    apply_activation(next.mat(), l.activation);
    h = std::move(next);
  }
  return h;
}

void Mlp::collect_params(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.push_back({prefix + ".w" + std::to_string(i), &layers_[i].weight});
    out.push_back({prefix + ".b" + std::to_string(i), &layers_[i].bias});
  }
}

Var forward_mlp(const Mlp& params, Var input, Tape& tape, bool trainable) {
  const auto& x = input.value();
  if (x.rank() != 2 || x.cols() != params.in_dim()) {
    throw ConfigError("forward_mlp: input shape " + shape_to_string(x.shape()) +
                      " but network expects width " + std::to_string(params.in_dim()));
  }
  Var h = input;
  for (const auto& l : params.layers()) {
    const Var w = trainable ? tape.parameter(l.weight) : tape.frozen(l.weight);
    const Var b = trainable ? tape.parameter(l.bias) : tape.frozen(l.bias);
    h = tape.add_bias(tape.matmul(h, w), b);
    switch (l.activation) {
      case Activation::Linear: break;
      case Activation::Relu: h = tape.relu(h); break;
      case Activation::LeakyRelu: h = tape.leaky_relu(h, kLeakySlope); break;
      case Activation::Tanh: h = tape.tanh(h); break;
    }
  }
  return h;
}

}  // namespace anicemc
