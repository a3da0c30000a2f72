#pragma once

#include "anicemc/autodiff.hpp"
#include "anicemc/mlp.hpp"

#include <cstdint>
#include <vector>

namespace anicemc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators mirroring a ParamList, plus the step count.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, const ParamList& params);
};

/// Gradients for every entry of `params`, zero-filled where the tape never reached one.
std::vector<Tensor> collect_gradients(const Gradients& grads, const ParamList& params);

/// One bias-corrected Adam update applied in place. Validates all gradients
/// before touching any parameter; a non-finite entry raises NumericError
/// naming the parameter.
void adam_step(const ParamList& params, const std::vector<Tensor>& grads, AdamState& state);

/// Clamps every parameter entry into [-limit, limit].
void clip_weights(const ParamList& params, double limit);

}  // namespace anicemc
