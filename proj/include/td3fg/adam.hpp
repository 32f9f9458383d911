#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "td3fg/mlp.hpp"

namespace td3fg {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators shaped like the parameters they drive.
struct AdamState {
  MLPGrads m;
  MLPGrads v;
  std::uint64_t step = 0;
  AdamConfig cfg;

  AdamState() = default;
  AdamState(const MLPParams& params, AdamConfig c)
      : m(zeros_like(params)), v(zeros_like(params)), cfg(c) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(MLPParams& params, const MLPGrads& grads, AdamState& state) {
  if (!same_shape(params, grads) || !same_shape(params, state.m) ||
      !same_shape(params, state.v)) {
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  }
  ++state.step;
  const auto& c = state.cfg;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                      std::span<double> v) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
        const double mhat = m[k] / corr1;
        const double vhat = v[k] / corr2;
        p[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
      }
    };
    update(params.layers[i].weight.data(), grads.layers[i].weight.data(),
           state.m.layers[i].weight.data(), state.v.layers[i].weight.data());
    update(params.layers[i].bias, grads.layers[i].bias, state.m.layers[i].bias,
           state.v.layers[i].bias);
  }
  ++params.revision;
}

}  // namespace td3fg
