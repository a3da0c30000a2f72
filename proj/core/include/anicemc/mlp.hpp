#pragma once

#include "anicemc/autodiff.hpp"
#include "anicemc/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace anicemc {

enum class Activation { Linear, Relu, LeakyRelu, Tanh };

/// Slope of the negative branch wherever "lrelu" is used.
inline constexpr double kLeakySlope = 0.2;

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Activation activation = Activation::Linear;

  std::size_t in_dim() const { return weight.shape()[0]; }
  std::size_t out_dim() const { return weight.shape()[1]; }
};

/// Named reference to a trainable tensor owned elsewhere.
struct ParamRef {
  std::string name;
  Tensor* value;
};
using ParamList = std::vector<ParamRef>;

/// Fully connected network, applied row-wise to [batch, in] inputs.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Hidden layers use `hidden_act`; the output layer is linear. Weights are
  /// drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases start at zero.
  static Mlp xavier(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                    std::size_t out_dim, Activation hidden_act, std::mt19937_64& rng);
  /// Same topology with every weight and bias zero.
  static Mlp zeros(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                   std::size_t out_dim, Activation hidden_act);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  /// Evaluates without recording; input is [batch, in_dim].
  Tensor evaluate(const Tensor& input) const;
  /// Appends every weight and bias to `out`, names prefixed by `prefix`.
  void collect_params(const std::string& prefix, ParamList& out);

 private:
  void validate() const;
  std::vector<DenseLayer> layers_;
};

/// Records the network on `tape`. With `trainable` false the weights are bound
/// as frozen leaves. Throws ConfigError when the input width is wrong.
Var forward_mlp(const Mlp& params, Var input, Tape& tape, bool trainable = true);

}  // namespace anicemc
