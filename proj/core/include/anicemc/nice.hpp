#pragma once

#include "anicemc/autodiff.hpp"
#include "anicemc/checkpoint.hpp"
#include "anicemc/mlp.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace anicemc {

/// Which half of the (x, v) state a coupling layer shifts.
enum class Part { X, V };

char part_tag(Part p);
Part parse_part(char c);

/// Additive coupling: the updated part moves by m(conditioning part), the
/// other part passes through untouched. Unit Jacobian determinant.
struct CouplingLayer {
  Part update = Part::V;
  Mlp shift;
};

/// Architecture of a NICE model. `hidden[i]` lists the hidden widths of layer i's shift network.
struct NiceSpec {
  std::size_t x_dim = 2;
  std::size_t v_dim = 2;
  std::string pattern = "VXV";
  std::vector<std::vector<std::size_t>> hidden{{400}, {400}, {400}};
  Activation activation = Activation::LeakyRelu;
};

/// Volume-preserving flow over (x, v): layers applied in order by forward(),
/// in reverse with subtraction by inverse().
class NiceModel {
 public:
  NiceModel() = default;
  NiceModel(std::size_t x_dim, std::size_t v_dim, std::vector<CouplingLayer> layers);

  /// Random (Xavier) initialization drawn from `rng`.
  static NiceModel create(const NiceSpec& spec, std::mt19937_64& rng);
  /// Every shift network zero: the identity map.
  static NiceModel identity(const NiceSpec& spec);

  std::size_t x_dim() const noexcept { return x_dim_; }
  std::size_t v_dim() const noexcept { return v_dim_; }
  const std::vector<CouplingLayer>& layers() const noexcept { return layers_; }
  std::vector<CouplingLayer>& layers() noexcept { return layers_; }
  std::string pattern() const;

  std::pair<Tensor, Tensor> forward(const Tensor& x, const Tensor& v) const;
  std::pair<Tensor, Tensor> inverse(const Tensor& x, const Tensor& v) const;
  /// Recorded forward pass for training.
  std::pair<Var, Var> forward(Var x, Var v, Tape& tape) const;

  ParamList params();

  /// Checkpoint with header keys kind, x_dim, v_dim, pattern, hidden, activation.
  Checkpoint to_checkpoint() const;
  static NiceModel from_checkpoint(const Checkpoint& ckpt);

 private:
  void check_shapes(const Tensor& x, const Tensor& v) const;

  std::size_t x_dim_ = 0;
  std::size_t v_dim_ = 0;
  std::vector<CouplingLayer> layers_;
};

/// One coupling layer, untracked.
std::pair<Tensor, Tensor> coupling_forward(const CouplingLayer& layer, const Tensor& x, const Tensor& v);
std::pair<Tensor, Tensor> coupling_inverse(const CouplingLayer& layer, const Tensor& x, const Tensor& v);
/// One coupling layer, recorded on `tape`.
std::pair<Var, Var> coupling_forward(const CouplingLayer& layer, Var x, Var v, Tape& tape);

inline std::pair<Tensor, Tensor> nice_forward(const NiceModel& m, const Tensor& x, const Tensor& v) {
  return m.forward(x, v);
}
inline std::pair<Tensor, Tensor> nice_inverse(const NiceModel& m, const Tensor& x, const Tensor& v) {
  return m.inverse(x, v);
}

}  // namespace anicemc
