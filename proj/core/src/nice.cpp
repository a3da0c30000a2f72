#include "anicemc/nice.hpp"

#include "anicemc/errors.hpp"

#include <sstream>

namespace anicemc {

char part_tag(Part p) { return p == Part::X ? 'X' : 'V'; }

Part parse_part(char c) {
  if (c == 'X' || c == 'x') return Part::X;
  if (c == 'V' || c == 'v') return Part::V;
  throw ConfigError(std::string("coupling pattern letter must be X or V, got '") + c + "'");
}

NiceModel::NiceModel(std::size_t x_dim, std::size_t v_dim, std::vector<CouplingLayer> layers)
    : x_dim_(x_dim), v_dim_(v_dim), layers_(std::move(layers)) {
  if (x_dim_ == 0 || v_dim_ == 0) throw ConfigError("NICE dimensions must be positive");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const auto cond = l.update == Part::X ? v_dim_ : x_dim_;
    const auto upd = l.update == Part::X ? x_dim_ : v_dim_;
    if (l.shift.in_dim() != cond || l.shift.out_dim() != upd) {
      throw ConfigError("coupling layer " + std::to_string(i) + " (" + part_tag(l.update) +
                        ") maps " + std::to_string(l.shift.in_dim()) + " -> " +
                        std::to_string(l.shift.out_dim()) + ", expected " + std::to_string(cond) +
                        " -> " + std::to_string(upd));
    }
  }
}

namespace {

std::vector<CouplingLayer> build_layers(const NiceSpec& spec, std::mt19937_64* rng) {
  if (spec.hidden.size() != spec.pattern.size()) {
    throw ConfigError("NICE spec lists " + std::to_string(spec.hidden.size()) +
                      " hidden configurations for pattern '" + spec.pattern + "'");
  }
  std::vector<CouplingLayer> layers;
  for (std::size_t i = 0; i < spec.pattern.size(); ++i) {
    CouplingLayer l;
    l.update = parse_part(spec.pattern[i]);
    const auto cond = l.update == Part::X ? spec.v_dim : spec.x_dim;
    const auto upd = l.update == Part::X ? spec.x_dim : spec.v_dim;
    l.shift = rng ? Mlp::xavier(cond, spec.hidden[i], upd, spec.activation, *rng)
                  : Mlp::zeros(cond, spec.hidden[i], upd, spec.activation);
    layers.push_back(std::move(l));
  }
  return layers;
}

}  // namespace

NiceModel NiceModel::create(const NiceSpec& spec, std::mt19937_64& rng) {
  return NiceModel(spec.x_dim, spec.v_dim, build_layers(spec, &rng));
}

NiceModel NiceModel::identity(const NiceSpec& spec) {
  return NiceModel(spec.x_dim, spec.v_dim, build_layers(spec, nullptr));
}

std::string NiceModel::pattern() const {
  std::string p;
  for (const auto& l : layers_) p.push_back(part_tag(l.update));
  return p;
}

void NiceModel::check_shapes(const Tensor& x, const Tensor& v) const {
  require_matrix(x, "nice");
  require_matrix(v, "nice");
  if (x.cols() != x_dim_ || v.cols() != v_dim_ || x.rows() != v.rows()) {
    throw ConfigError("nice: states " + shape_to_string(x.shape()) + " / " +
                      shape_to_string(v.shape()) + " do not match x_dim=" + std::to_string(x_dim_) +
                      ", v_dim=" + std::to_string(v_dim_));
  }
}

std::pair<Tensor, Tensor> coupling_forward(const CouplingLayer& layer, const Tensor& x,
                                           const Tensor& v) {
  if (layer.update == Part::X) {
    Tensor shifted = x;
    shifted.mat() += layer.shift.evaluate(v).mat();
    return {std::move(shifted), v};
  }
  Tensor shifted = v;
  shifted.mat() += layer.shift.evaluate(x).mat();
  return {x, std::move(shifted)};
}

std::pair<Tensor, Tensor> coupling_inverse(const CouplingLayer& layer, const Tensor& x,
                                           const Tensor& v) {
  if (layer.update == Part::X) {
    Tensor shifted = x;
    shifted.mat() -= layer.shift.evaluate(v).mat();
    return {std::move(shifted), v};
  }
  Tensor shifted = v;
  shifted.mat() -= layer.shift.evaluate(x).mat();
  return {x, std::move(shifted)};
}

std::pair<Var, Var> coupling_forward(const CouplingLayer& layer, Var x, Var v, Tape& tape) {
  if (layer.update == Part::X) return {tape.add(x, forward_mlp(layer.shift, v, tape)), v};
  return {x, tape.add(v, forward_mlp(layer.shift, x, tape))};
}

std::pair<Tensor, Tensor> NiceModel::forward(const Tensor& x, const Tensor& v) const {
  check_shapes(x, v);
  std::pair<Tensor, Tensor> s{x, v};
  for (const auto& l : layers_) s = coupling_forward(l, s.first, s.second);
  return s;
}

std::pair<Tensor, Tensor> NiceModel::inverse(const Tensor& x, const Tensor& v) const {
  check_shapes(x, v);
  std::pair<Tensor, Tensor> s{x, v};
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    s = coupling_inverse(*it, s.first, s.second);
  }
  return s;
}

std::pair<Var, Var> NiceModel::forward(Var x, Var v, Tape& tape) const {
  check_shapes(x.value(), v.value());
  std::pair<Var, Var> s{x, v};
  for (const auto& l : layers_) s = coupling_forward(l, s.first, s.second, tape);
  return s;
}

ParamList NiceModel::params() {
  ParamList out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].shift.collect_params("nice.layer" + std::to_string(i), out);
  }
  return out;
}

Checkpoint NiceModel::to_checkpoint() const {
  Checkpoint ckpt;
  std::ostringstream hidden;
  std::ostringstream acts;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i) {
      hidden << ';';
      acts << ';';
    }
    const auto& ls = layers_[i].shift.layers();
    for (std::size_t j = 0; j + 1 < ls.size(); ++j) {
      if (j) hidden << ',';
      hidden << ls[j].out_dim();
    }
    acts << activation_name(ls.empty() ? Activation::Linear : ls.front().activation);
  }
  ckpt.metadata = {{"kind", "nice"},
                   {"x_dim", std::to_string(x_dim_)},
                   {"v_dim", std::to_string(v_dim_)},
                   {"pattern", pattern()},
                   {"hidden", hidden.str()},
                   {"activation", acts.str()}};
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& ls = layers_[i].shift.layers();
    for (std::size_t j = 0; j < ls.size(); ++j) {
      const auto base = "nice.layer" + std::to_string(i);
      ckpt.tensors.emplace_back(base + ".w" + std::to_string(j), ls[j].weight);
      ckpt.tensors.emplace_back(base + ".b" + std::to_string(j), ls[j].bias);
    }
  }
  return ckpt;
}

NiceModel NiceModel::from_checkpoint(const Checkpoint& ckpt) {
  const auto* kind = ckpt.meta("kind");
  if (!kind || *kind != "nice") throw IoError("checkpoint does not hold a NICE model");
  const auto* xd = ckpt.meta("x_dim");
  const auto* vd = ckpt.meta("v_dim");
  const auto* pat = ckpt.meta("pattern");
  const auto* act = ckpt.meta("activation");
  if (!xd || !vd || !pat || !act) throw IoError("NICE checkpoint header incomplete");

  std::vector<std::string> acts;
  {
    std::stringstream ss(*act);
    std::string tok;
    while (std::getline(ss, tok, ';')) acts.push_back(tok);
  }
  if (acts.size() != pat->size()) throw IoError("NICE checkpoint activation list mismatch");

  std::vector<CouplingLayer> layers;
  for (std::size_t i = 0; i < pat->size(); ++i) {
    CouplingLayer l;
    l.update = parse_part((*pat)[i]);
    const auto hidden_act = parse_activation(acts[i]);
    std::vector<DenseLayer> dense;
    for (std::size_t j = 0;; ++j) {
      const auto base = "nice.layer" + std::to_string(i);
      const auto* w = ckpt.tensor(base + ".w" + std::to_string(j));
      const auto* b = ckpt.tensor(base + ".b" + std::to_string(j));
      if (!w || !b) break;
      dense.push_back({*w, *b, hidden_act});
    }
    if (dense.empty()) throw IoError("NICE checkpoint missing tensors for layer " + std::to_string(i));
    dense.back().activation = Activation::Linear;
    l.shift = Mlp(std::move(dense));
    layers.push_back(std::move(l));
  }
  return NiceModel(std::stoul(*xd), std::stoul(*vd), std::move(layers));
}

}  // namespace anicemc
