#pragma once

// Independent oracles shared by the unit and acceptance tests: a scalar-loop
// forward pass and a central finite-difference gradient check.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "td3fg/mlp.hpp"
#include "td3fg/rng.hpp"

namespace testing_oracle {

using td3fg::HiddenActivation;
using td3fg::MLPParams;
using td3fg::OutputActivation;
using td3fg::Vector;

inline Vector naive_forward(const MLPParams& p, std::span<const double> x) {
  Vector h(x.begin(), x.end());
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& l = p.layers[li];
    Vector z(l.out());
    for (std::size_t o = 0; o < l.out(); ++o) {
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.in(); ++i) acc += l.weight(o, i) * h[i];
      z[o] = acc;
    }
    const bool last = li + 1 == p.layers.size();
    for (auto& v : z) {
      if (!last) {
        v = p.hidden_activation == HiddenActivation::Relu ? std::max(v, 0.0) : std::tanh(v);
      } else if (p.output_activation == OutputActivation::Tanh) {
        v = p.output_scale * std::tanh(v);
      }
    }
    h = std::move(z);
  }
  return h;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compare backprop against central differences (h = 1e-5) of the scalar
/// loss sum(c * f(x)) over a random batch, for every weight and bias.
inline GradCheck check_gradients(MLPParams p, td3fg::Rng& rng, std::size_t batch) {
  std::normal_distribution<double> g;
  td3fg::Matrix x(batch, p.in_dim()), c(batch, p.out_dim());
  for (auto& v : x.data()) v = g(rng);
  for (auto& v : c.data()) v = g(rng);

  auto loss = [&](const MLPParams& q) {
    double s = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      const Vector y = naive_forward(q, x.row_span(r));
      for (std::size_t k = 0; k < y.size(); ++k) s += c(r, k) * y[k];
    }
    return s;
  };

  auto fwd = td3fg::mlp_forward(p, x);
  const auto grads = td3fg::mlp_backward(p, fwd.tape, c).grads;

  GradCheck res;
  const double h = 1e-5;
  auto probe = [&](double& param, double analytic) {
    const double orig = param;
    param = orig + h;
    const double up = loss(p);
    param = orig - h;
    const double down = loss(p);
    param = orig;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-7});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(fd - analytic) / denom);
    ++res.checked;
  };
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    auto& l = p.layers[li];
    const auto& gl = grads.layers[li];
    for (std::size_t i = 0; i < l.weight.size(); ++i) probe(l.weight.data()[i], gl.weight.data()[i]);
    for (std::size_t i = 0; i < l.bias.size(); ++i) probe(l.bias[i], gl.bias[i]);
  }
  return res;
}

}  // namespace testing_oracle
