#pragma once

// Reference action generator: a deterministic policy fitted to demonstration
// (state, action) pairs by minibatch mean-squared-error regression, then
// frozen for the rest of training.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "td3fg/adam.hpp"
#include "td3fg/demos.hpp"
#include "td3fg/envs.hpp"
#include "td3fg/mlp.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"

namespace td3fg {

struct GeneratorConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double validation_fraction = 0.1;
  /// Epochs without validation improvement before stopping; 0 disables.
  std::size_t early_stop_patience = 20;
  std::vector<std::size_t> hidden{64, 64};
  HiddenActivation hidden_activation = HiddenActivation::Relu;

  void validate() const {
    if (batch_size == 0) throw ConfigError("generator batch_size must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("generator validation_fraction must be in [0, 1)");
    }
    if (!(lr > 0.0)) throw ConfigError("generator lr must be positive");
    if (hidden.empty()) throw ConfigError("generator needs at least one hidden layer");
  }

  bool operator==(const GeneratorConfig&) const = default;
};

struct EpochLoss {
  double train = 0.0;
  /// Absent when no transitions were held out.
  std::optional<double> validation;
};

/// Behavior-cloning loss of `net` on (states, actions) and its output gradient.
/// The training loop, validation and reporting all go through this function.
inline std::pair<double, Matrix> bc_batch_loss(const MLPParams& net, const Matrix& states,
                                               const Matrix& actions,
                                               ForwardResult* forward = nullptr) {
  if (forward) {
    *forward = mlp_forward(net, states);
    return mse_loss(forward->output, actions);
  }
  return mse_loss(mlp_predict(net, states), actions);
}

/// Frozen generator; parameters are immutable once constructed.
class ReferenceGenerator {
 public:
  ReferenceGenerator() = default;
  explicit ReferenceGenerator(MLPParams params)
      : params_(std::make_shared<const MLPParams>(std::move(params))) {
    params_->validate();
  }

  bool valid() const noexcept { return params_ != nullptr; }
  const MLPParams& params() const { return *params_; }

  Vector act(std::span<const double> observation) const {
    if (observation.size() != params_->in_dim()) {
      throw ShapeError("generator: observation length " + std::to_string(observation.size()) +
                       " != " + std::to_string(params_->in_dim()));
    }
    return mlp_predict(*params_, observation);
  }

  Matrix act(const Matrix& observations) const { return mlp_predict(*params_, observations); }

 private:
  std::shared_ptr<const MLPParams> params_;
};

inline Vector generator_act(const ReferenceGenerator& g, std::span<const double> observation) {
  return g.act(observation);
}

struct GeneratorResult {
  MLPParams params;
  std::vector<EpochLoss> history;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

namespace detail {

inline std::pair<Matrix, Matrix> gather_pairs(const std::vector<Transition>& data,
                                              std::span<const std::size_t> idx,
                                              std::size_t obs_dim, std::size_t act_dim) {
  Matrix s(idx.size(), obs_dim), a(idx.size(), act_dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& t = data[idx[r]];
    std::copy(t.s.begin(), t.s.end(), s.row_span(r).begin());
    std::copy(t.a.begin(), t.a.end(), a.row_span(r).begin());
  }
  return {std::move(s), std::move(a)};
}

}  // namespace detail

struct Split {
  std::vector<std::size_t> train, validation;
};

/// Shuffled train/validation partition of transition indices [0, n).
inline Split holdout_split(std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(seed, 1);
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_val = static_cast<std::size_t>(validation_fraction * static_cast<double>(n));
  Split s;
  s.validation.assign(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  s.train.assign(order.begin() + std::ptrdiff_t(n_val), order.end());
  return s;
}

/// Fit a generator to the demo set. Returns the parameters with the best
/// validation loss (or the last epoch when nothing is held out).
inline GeneratorResult train_generator(const DemoSet& set, const GeneratorConfig& cfg,
                                       std::uint64_t seed) {
  cfg.validate();
  const EnvSpec spec = env_spec(set.env);
  const auto data = flatten_transitions(set);
  for (const auto& t : data) {
    if (t.s.size() != spec.obs_dim || t.a.size() != spec.act_dim) {
      throw ConfigError("demo transition dims do not match env '" + set.env + "'");
    }
  }

  auto [train_idx, val_idx] = holdout_split(data.size(), cfg.validation_fraction, seed);
  if (train_idx.size() < cfg.batch_size) {
    throw ConfigError("generator: " + std::to_string(train_idx.size()) +
                      " training transitions < batch_size " + std::to_string(cfg.batch_size));
  }

  std::vector<std::size_t> dims{spec.obs_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(spec.act_dim);
  Rng init_rng = make_rng(seed, 2);
  GeneratorResult result;
  result.params = make_mlp(dims, OutputActivation::Tanh, spec.action_bound, init_rng,
                           cfg.hidden_activation);
  result.train_count = train_idx.size();
  result.validation_count = val_idx.size();
  if (cfg.epochs == 0) return result;

  const auto [train_s, train_a] =
      detail::gather_pairs(data, train_idx, spec.obs_dim, spec.act_dim);
  Matrix val_s, val_a;
  if (!val_idx.empty()) {
    std::tie(val_s, val_a) = detail::gather_pairs(data, val_idx, spec.obs_dim, spec.act_dim);
  }

  AdamState adam(result.params, AdamConfig{cfg.lr});
  Rng batch_rng = make_rng(seed, 3);
  std::vector<std::size_t> perm(train_idx.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  MLPParams best = result.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), batch_rng);
    for (std::size_t start = 0; start + cfg.batch_size <= perm.size(); start += cfg.batch_size) {
      Matrix bs(cfg.batch_size, spec.obs_dim), ba(cfg.batch_size, spec.act_dim);
      for (std::size_t r = 0; r < cfg.batch_size; ++r) {
        const std::size_t row = perm[start + r];
        std::copy(train_s.row_span(row).begin(), train_s.row_span(row).end(),
                  bs.row_span(r).begin());
        std::copy(train_a.row_span(row).begin(), train_a.row_span(row).end(),
                  ba.row_span(r).begin());
      }
      ForwardResult fwd;
      auto [loss, grad] = bc_batch_loss(result.params, bs, ba, &fwd);
      (void)loss;
      auto back = mlp_backward(result.params, fwd.tape, grad);
      adam_step(result.params, back.grads, adam);
    }

    EpochLoss el;
    el.train = bc_batch_loss(result.params, train_s, train_a).first;
    if (!val_idx.empty()) el.validation = bc_batch_loss(result.params, val_s, val_a).first;
    result.history.push_back(el);

    if (el.validation) {
      if (*el.validation < best_val) {
        best_val = *el.validation;
        best = result.params;
        since_best = 0;
      } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
        break;
      }
    }
  }
  if (!val_idx.empty()) result.params = std::move(best);
  return result;
}

}  // namespace td3fg
