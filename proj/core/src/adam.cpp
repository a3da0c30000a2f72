#include "anicemc/adam.hpp"

#include "anicemc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace anicemc {

AdamState::AdamState(const AdamConfig& cfg, const ParamList& params) : config(cfg) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.value->shape());
    second_moment.emplace_back(p.value->shape());
  }
}

std::vector<Tensor> collect_gradients(const Gradients& grads, const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(grads.of(*p.value));
  return out;
}

void adam_step(const ParamList& params, const std::vector<Tensor>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                      std::to_string(grads.size()) + " gradients, " +
                      std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i].value, grads[i], "adam_step");
    require_same_shape(*params[i].value, state.first_moment[i], "adam_step");
    if (!grads[i].all_finite()) {
      throw NumericError("adam_step: non-finite gradient for parameter '" + params[i].name + "'");
    }
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value->data();
    auto g = grads[i].data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void clip_weights(const ParamList& params, double limit) {
  for (const auto& p : params) {
    for (auto& x : p.value->data()) x = std::clamp(x, -limit, limit);
  }
}

}  // namespace anicemc
