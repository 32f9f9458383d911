#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "td3fg/error.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"

namespace td3fg {

enum class OutputActivation { Identity, Tanh };
enum class HiddenActivation { Tanh, Relu };

/// One affine layer: y = W x + b with W stored out x in.
struct Layer {
  Matrix weight;
  Vector bias;

  std::size_t in() const noexcept { return weight.cols(); }
  std::size_t out() const noexcept { return weight.rows(); }
  bool operator==(const Layer&) const = default;
};

/// Fully connected network with tanh or ReLU hidden units.
///
/// The output layer is either identity (critics) or `output_scale * tanh`
/// (actors and generators, so outputs stay inside the action bound).
/// `revision` is bumped by every in-place update and lets a GradientTape
/// detect that the parameters changed since its forward pass.
struct MLPParams {
  std::vector<Layer> layers;
  OutputActivation output_activation = OutputActivation::Identity;
  double output_scale = 1.0;
  HiddenActivation hidden_activation = HiddenActivation::Tanh;
  std::uint64_t revision = 0;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().in(); }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Layer dimensions as {in, hidden..., out}.
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().in());
    for (const auto& l : layers) d.push_back(l.out());
    return d;
  }

  /// Structural equality of values; `revision` is bookkeeping and ignored.
  bool operator==(const MLPParams& o) const {
    return layers == o.layers && output_activation == o.output_activation &&
           output_scale == o.output_scale && hidden_activation == o.hidden_activation;
  }

  void validate() const {
    if (layers.size() < 2) throw ShapeError("MLP needs at least one hidden layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out()) {
        throw ShapeError("layer " + std::to_string(i) + ": bias length != out dim");
      }
      if (i + 1 < layers.size() && l.out() != layers[i + 1].in()) {
        throw ShapeError("layer " + std::to_string(i) + " out dim does not chain into layer " +
                         std::to_string(i + 1));
      }
    }
  }
};

/// Gradients share the parameter layout.
using MLPGrads = MLPParams;

/// Network with weights uniform in +-1/sqrt(fan_in) and biases likewise.
inline MLPParams make_mlp(std::span<const std::size_t> dims, OutputActivation out_act,
                          double output_scale, Rng& rng,
                          HiddenActivation hidden = HiddenActivation::Tanh) {
  if (dims.size() < 3) throw ShapeError("MLP needs at least one hidden layer");
  MLPParams p;
  p.output_activation = out_act;
  p.output_scale = output_scale;
  p.hidden_activation = hidden;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t in = dims[i], out = dims[i + 1];
    if (in == 0 || out == 0) throw ShapeError("MLP layer dims must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l{Matrix(out, in), Vector(out)};
    for (auto& w : l.weight.data()) w = u(rng);
    for (auto& b : l.bias) b = u(rng);
    p.layers.push_back(std::move(l));
  }
  return p;
}

inline MLPParams make_mlp(std::initializer_list<std::size_t> dims, OutputActivation out_act,
                          double output_scale, Rng& rng,
                          HiddenActivation hidden = HiddenActivation::Tanh) {
  std::vector<std::size_t> d(dims);
  return make_mlp(std::span<const std::size_t>(d), out_act, output_scale, rng, hidden);
}

/// Same shape as `p`, every value zero.
inline MLPParams zeros_like(const MLPParams& p) {
  MLPParams z;
  z.output_activation = p.output_activation;
  z.output_scale = p.output_scale;
  z.hidden_activation = p.hidden_activation;
  for (const auto& l : p.layers) z.layers.push_back({Matrix(l.out(), l.in()), Vector(l.out())});
  return z;
}

inline bool same_shape(const MLPParams& a, const MLPParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].in() != b.layers[i].in() || a.layers[i].out() != b.layers[i].out()) {
      return false;
    }
  }
  return true;
}

/// Cached activations of one forward pass.
struct GradientTape {
  /// inputs[i] is the input to layer i (batch x in_i).
  std::vector<Matrix> inputs;
  /// Post-activation of the output layer before scaling.
  Matrix output_activation;
  const MLPParams* source = nullptr;
  std::uint64_t revision = 0;
};

struct ForwardResult {
  Matrix output;
  GradientTape tape;
};

namespace detail {

inline Matrix affine(const Layer& l, const Matrix& x) {
  Matrix z(x.rows(), l.out());
  auto ze = eig(z);
  ze.noalias() = eig(x) * eig(l.weight).transpose();
  ze.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(l.bias.data(), Eigen::Index(l.out()));
  return z;
}

/// tanh(x) = 1 - 2 / (exp(2x) + 1), vectorized through Eigen's exp.
/// Absolute error stays within a few ulp of 1 for every finite input;
/// exp overflow saturates cleanly to +-1.
inline void tanh_inplace(Matrix& m) {
  Eigen::Map<Eigen::ArrayXd> a(m.data().data(), Eigen::Index(m.size()));
  a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

inline void relu_inplace(Matrix& m) {
  for (auto& v : m.data()) v = v > 0.0 ? v : 0.0;
}

inline void activate(Matrix& z, const MLPParams& p, bool last) {
  if (!last) {
    if (p.hidden_activation == HiddenActivation::Relu) {
      relu_inplace(z);
    } else {
      tanh_inplace(z);
    }
  } else if (p.output_activation == OutputActivation::Tanh) {
    tanh_inplace(z);
  }
}

inline void check_input(const MLPParams& p, const Matrix& x) {
  if (p.layers.empty()) throw ShapeError("forward on empty network");
  if (x.cols() != p.in_dim()) {
    throw ShapeError("forward: input width " + std::to_string(x.cols()) + " != network in dim " +
                     std::to_string(p.in_dim()));
  }
}

}  // namespace detail

/// Batched forward pass; rows of `x` are samples.
inline ForwardResult mlp_forward(const MLPParams& p, const Matrix& x) {
  detail::check_input(p, x);
  ForwardResult r;
  r.tape.source = &p;
  r.tape.revision = p.revision;
  r.tape.inputs.reserve(p.layers.size());
  Matrix h = x;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    Matrix z = detail::affine(p.layers[i], h);
    r.tape.inputs.push_back(std::move(h));
    detail::activate(z, p, i + 1 == p.layers.size());
    h = std::move(z);
  }
  r.tape.output_activation = h;
  if (p.output_activation == OutputActivation::Tanh && p.output_scale != 1.0) {
    for (auto& v : h.data()) v *= p.output_scale;
  }
  r.output = std::move(h);
  return r;
}

struct VectorForwardResult {
  Vector output;
  GradientTape tape;
};

inline VectorForwardResult mlp_forward(const MLPParams& p, std::span<const double> input) {
  auto r = mlp_forward(p, Matrix::row(input));
  return {r.output.to_vector(), std::move(r.tape)};
}

/// Forward pass without recording a tape.
inline Matrix mlp_predict(const MLPParams& p, const Matrix& x) {
  detail::check_input(p, x);
  Matrix h = x;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    Matrix z = detail::affine(p.layers[i], h);
    detail::activate(z, p, i + 1 == p.layers.size());
    h = std::move(z);
  }
  if (p.output_activation == OutputActivation::Tanh && p.output_scale != 1.0) {
    for (auto& v : h.data()) v *= p.output_scale;
  }
  return h;
}

inline Vector mlp_predict(const MLPParams& p, std::span<const double> input) {
  return mlp_predict(p, Matrix::row(input)).to_vector();
}

struct BackwardResult {
  MLPGrads grads;
  /// d(loss)/d(input), batch x in_dim.
  Matrix input_grad;
};

namespace detail {

inline void check_tape(const MLPParams& p, const GradientTape& tape, const Matrix& output_grad) {
  if (tape.source != &p || tape.revision != p.revision) {
    throw ShapeError("backward: tape does not belong to the current parameters");
  }
  if (tape.inputs.size() != p.layers.size()) throw ShapeError("backward: tape depth mismatch");
  const std::size_t batch = tape.inputs.front().rows();
  if (output_grad.rows() != batch || output_grad.cols() != p.out_dim()) {
    throw ShapeError("backward: output_grad shape does not match forward output");
  }
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    if (tape.inputs[i].cols() != p.layers[i].in() || tape.inputs[i].rows() != batch) {
      throw ShapeError("backward: cached input shape mismatch at layer " + std::to_string(i));
    }
  }
}

template <bool WithWeights>
BackwardResult backward_impl(const MLPParams& p, const GradientTape& tape,
                             const Matrix& output_grad) {
  check_tape(p, tape, output_grad);
  BackwardResult r;
  if constexpr (WithWeights) r.grads = zeros_like(p);
  const std::size_t n = p.layers.size();

  // dz for the output layer.
  Matrix dz = output_grad;
  if (p.output_activation == OutputActivation::Tanh) {
    const auto& a = tape.output_activation.data();
    auto& d = dz.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] *= p.output_scale * (1.0 - a[k] * a[k]);
  }
  for (std::size_t li = n; li-- > 0;) {
    const Layer& l = p.layers[li];
    const Matrix& x = tape.inputs[li];
    if constexpr (WithWeights) {
      eig(r.grads.layers[li].weight).noalias() = eig(dz).transpose() * eig(x);
      // Plain row-order loop: an Eigen reduction into this unaligned buffer
      // would pick its summation order from the heap address.
      auto& gb = r.grads.layers[li].bias;
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t row = 0; row < dz.rows(); ++row) {
        const auto d = dz.row_span(row);
        for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += d[j];
      }
    }
    Matrix dx(dz.rows(), l.in());
    eig(dx).noalias() = eig(dz) * eig(l.weight);
    if (li == 0) {
      r.input_grad = std::move(dx);
    } else {
      // x is the previous layer's post-activation.
      auto& d = dx.data();
      const auto& a = x.data();
      if (p.hidden_activation == HiddenActivation::Relu) {
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = a[k] > 0.0 ? d[k] : 0.0;
      } else {
        for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 1.0 - a[k] * a[k];
      }
      dz = std::move(dx);
    }
  }
  return r;
}

}  // namespace detail

/// Chain rule through the cached forward pass.
inline BackwardResult mlp_backward(const MLPParams& p, const GradientTape& tape,
                                   const Matrix& output_grad) {
  return detail::backward_impl<true>(p, tape, output_grad);
}

inline BackwardResult mlp_backward(const MLPParams& p, const GradientTape& tape,
                                   std::span<const double> output_grad) {
  return mlp_backward(p, tape, Matrix::row(output_grad));
}

/// Input gradient only; skips weight-gradient products.
inline Matrix mlp_input_grad(const MLPParams& p, const GradientTape& tape,
                             const Matrix& output_grad) {
  return std::move(detail::backward_impl<false>(p, tape, output_grad).input_grad);
}

/// target <- tau * online + (1 - tau) * target.
inline void soft_update(MLPParams& target, const MLPParams& online, double tau) {
  if (!same_shape(target, online)) throw ShapeError("soft_update: shape mismatch");
  const double keep = 1.0 - tau;
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& tw = target.layers[i].weight.data();
    const auto& ow = online.layers[i].weight.data();
    for (std::size_t k = 0; k < tw.size(); ++k) tw[k] = tau * ow[k] + keep * tw[k];
    auto& tb = target.layers[i].bias;
    const auto& ob = online.layers[i].bias;
    for (std::size_t k = 0; k < tb.size(); ++k) tb[k] = tau * ob[k] + keep * tb[k];
  }
  ++target.revision;
}

/// Visit every (param, grad) scalar pair in a fixed order.
template <typename Fn>
void for_each_pair(MLPParams& params, const MLPGrads& grads, Fn&& fn) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& w = params.layers[i].weight.data();
    const auto& gw = grads.layers[i].weight.data();
    for (std::size_t k = 0; k < w.size(); ++k) fn(w[k], gw[k]);
    auto& b = params.layers[i].bias;
    const auto& gb = grads.layers[i].bias;
    for (std::size_t k = 0; k < b.size(); ++k) fn(b[k], gb[k]);
  }
}

/// All parameters flattened in for_each_pair order.
inline Vector flatten(const MLPParams& p) {
  Vector out;
  out.reserve(p.param_count());
  for (const auto& l : p.layers) {
    out.insert(out.end(), l.weight.data().begin(), l.weight.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

inline bool all_finite(const MLPParams& p) {
  for (const auto& l : p.layers) {
    if (!all_finite(l.weight.data()) || !all_finite(l.bias)) return false;
  }
  return true;
}

}  // namespace td3fg
