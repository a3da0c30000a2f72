#pragma once

#include <anicemc/autodiff.hpp>
#include <anicemc/rng.hpp>
#include <anicemc/tensor.hpp>

#include <cmath>
#include <functional>

namespace testutil {

inline anicemc::Tensor random_tensor(anicemc::Shape shape, anicemc::StreamRng& rng, double scale = 1.0) {
  anicemc::Tensor t(std::move(shape));
  for (auto& x : t.storage()) x = scale * rng.normal();
  return t;
}

/// Central differences of a scalar function with respect to every entry of `t`.
inline anicemc::Tensor numeric_gradient(anicemc::Tensor& t, const std::function<double()>& f,
                                        double h = 1e-5) {
  anicemc::Tensor g(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t[i];
    t[i] = keep + h;
    const double up = f();
    t[i] = keep - h;
    const double down = f();
    t[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(1, |b_i|).
inline double max_rel_error(const anicemc::Tensor& a, const anicemc::Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]) / std::max(1.0, std::fabs(b[i])));
  }
  return worst;
}

}  // namespace testutil
