#pragma once

// TD3 with twin critics, target policy smoothing and delayed actor updates,
// plus the generator-guided variants:
//
//   td3               OU noise, Q-maximizing actor.
//   td3fg             composite noise, actor loss eps(t) |G(s) - pi(s)|^2 - delta(t) Q.
//   bc_finetune       actor initialized from the generator, then plain td3.
//   q_filter          composite noise, BC term gated per sample by Q(s,G(s)) > Q(s,pi(s)).
//   demo_replay       td3fg with demonstrations kept in a protected replay region.
//   action_noise_only composite noise, Q-maximizing actor.
//   td3fg_plus_an     scheduled BC loss plus composite noise (same mechanics as td3fg).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "td3fg/adam.hpp"
#include "td3fg/demos.hpp"
#include "td3fg/envs.hpp"
#include "td3fg/error.hpp"
#include "td3fg/exploration.hpp"
#include "td3fg/generator.hpp"
#include "td3fg/mlp.hpp"
#include "td3fg/replay.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"

namespace td3fg {

enum class Variant { TD3, TD3fG, BCFinetune, QFilter, DemoReplay, ActionNoiseOnly, TD3fGPlusAN };

inline const std::vector<std::pair<Variant, std::string>>& variant_names() {
  static const std::vector<std::pair<Variant, std::string>> names{
      {Variant::TD3, "td3"},
      {Variant::TD3fG, "td3fg"},
      {Variant::BCFinetune, "bc_finetune"},
      {Variant::QFilter, "q_filter"},
      {Variant::DemoReplay, "demo_replay"},
      {Variant::ActionNoiseOnly, "action_noise_only"},
      {Variant::TD3fGPlusAN, "td3fg_plus_an"}};
  return names;
}

inline std::string to_string(Variant v) {
  for (const auto& [k, n] : variant_names()) {
    if (k == v) return n;
  }
  return "td3";
}

inline Variant variant_from_string(const std::string& s) {
  for (const auto& [k, n] : variant_names()) {
    if (n == s) return k;
  }
  throw ConfigError("unknown variant '" + s + "'");
}

enum class ActorObjective { MaximizeQ, Scheduled, QFiltered };

/// What each variant switches on.
struct VariantTraits {
  bool needs_generator = false;
  bool needs_demos = false;
  bool generator_noise = false;
  bool actor_from_generator = false;
  /// Random-action warmup; off where the generator guides early exploration.
  bool warmup = true;
  ActorObjective objective = ActorObjective::MaximizeQ;
};

inline VariantTraits traits(Variant v) {
  switch (v) {
    case Variant::TD3: return {};
    case Variant::TD3fG:
    case Variant::TD3fGPlusAN: return {true, false, true, false, false, ActorObjective::Scheduled};
    case Variant::BCFinetune: return {true, false, false, true, false, ActorObjective::MaximizeQ};
    case Variant::QFilter: return {true, false, true, false, false, ActorObjective::QFiltered};
    case Variant::DemoReplay: return {true, true, true, false, false, ActorObjective::Scheduled};
    case Variant::ActionNoiseOnly:
      return {true, false, true, false, false, ActorObjective::MaximizeQ};
  }
  return {};
}

struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t policy_delay = 2;
  std::size_t batch_size = 128;
  /// Target policy smoothing: noise std and clip.
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup_steps = 1000;
  /// Cap on demonstration transitions stored by demo_replay.
  std::size_t demo_transitions = 10000;
  std::vector<std::size_t> hidden{64, 64};
  HiddenActivation hidden_activation = HiddenActivation::Relu;
  Variant variant = Variant::TD3;
  ScheduleConfig schedule;
  OUConfig noise;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma must be in [0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("agent.tau must be in (0, 1]");
    if (policy_delay < 1) throw ConfigError("agent.policy_delay must be >= 1");
    if (batch_size < 1) throw ConfigError("agent.batch_size must be >= 1");
    if (!(target_noise >= 0.0) || !(target_noise_clip >= 0.0)) {
      throw ConfigError("agent target smoothing noise must be >= 0");
    }
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be > 0");
    if (buffer_capacity < batch_size) throw ConfigError("agent.buffer_capacity < batch_size");
    if (hidden.empty()) throw ConfigError("agent.hidden needs at least one layer");
    schedule.validate();
    noise.validate();
  }

  bool operator==(const AgentConfig&) const = default;
};

/// Online and target networks with their optimizers.
struct Networks {
  MLPParams actor, actor_target;
  MLPParams critic1, critic2, critic1_target, critic2_target;
  AdamState actor_opt, critic1_opt, critic2_opt;
};

inline Networks make_networks(const EnvSpec& spec, const AgentConfig& cfg, Rng& rng) {
  std::vector<std::size_t> actor_dims{spec.obs_dim};
  actor_dims.insert(actor_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  actor_dims.push_back(spec.act_dim);
  std::vector<std::size_t> critic_dims{spec.obs_dim + spec.act_dim};
  critic_dims.insert(critic_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_dims.push_back(1);

  Networks n;
  const auto h = cfg.hidden_activation;
  n.actor = make_mlp(actor_dims, OutputActivation::Tanh, spec.action_bound, rng, h);
  n.critic1 = make_mlp(critic_dims, OutputActivation::Identity, 1.0, rng, h);
  n.critic2 = make_mlp(critic_dims, OutputActivation::Identity, 1.0, rng, h);
  n.actor_target = n.actor;
  n.critic1_target = n.critic1;
  n.critic2_target = n.critic2;
  n.actor_opt = AdamState(n.actor, AdamConfig{cfg.actor_lr});
  n.critic1_opt = AdamState(n.critic1, AdamConfig{cfg.critic_lr});
  n.critic2_opt = AdamState(n.critic2, AdamConfig{cfg.critic_lr});
  return n;
}

/// Replace the actor (and its target) by a copy of the generator.
inline void init_actor_from(Networks& n, const MLPParams& source, const AgentConfig& cfg) {
  if (!same_shape(n.actor, source) || n.actor.output_scale != source.output_scale ||
      n.actor.output_activation != source.output_activation ||
      n.actor.hidden_activation != source.hidden_activation) {
    throw ConfigError("generator architecture does not match the actor; cannot fine-tune");
  }
  n.actor = source;
  n.actor.revision = 0;
  n.actor_target = n.actor;
  n.actor_opt = AdamState(n.actor, AdamConfig{cfg.actor_lr});
}

struct LossReport {
  double critic_loss = 0.0;
  double actor_q_term = 0.0;
  double bc_term = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  /// Samples whose BC term was active (all for scheduled, filtered for q_filter).
  std::size_t bc_active = 0;
  bool actor_updated = false;
};

// ---------------------------------------------------------------------------
// Critic

/// r + (1 - done) * gamma * min(q1, q2).
inline double bellman_target(double r, bool done, double q1, double q2, double gamma) {
  return r + (done ? 0.0 : gamma * std::min(q1, q2));
}

/// Bootstrapped targets through the target actor with clipped smoothing noise.
inline Vector critic_targets(const Batch& b, const Networks& n, const AgentConfig& cfg,
                             double action_bound, Rng& rng) {
  Matrix a_next = mlp_predict(n.actor_target, b.s_next);
  if (cfg.target_noise > 0.0) {
    std::normal_distribution<double> gauss(0.0, cfg.target_noise);
    for (auto& v : a_next.data()) {
      const double e = std::clamp(gauss(rng), -cfg.target_noise_clip, cfg.target_noise_clip);
      v = std::clamp(v + e, -action_bound, action_bound);
    }
  }
  const Matrix x_next = hconcat(b.s_next, a_next);
  const Matrix q1 = mlp_predict(n.critic1_target, x_next);
  const Matrix q2 = mlp_predict(n.critic2_target, x_next);
  Vector y(b.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = bellman_target(b.r[i], b.done[i] != 0.0, q1.data()[i], q2.data()[i], cfg.gamma);
  }
  return y;
}

/// Regress both critics onto the shared target; returns their mean MSE.
inline double critic_update(const Batch& b, Networks& n, const AgentConfig& cfg,
                            double action_bound, Rng& rng) {
  if (b.size() != cfg.batch_size) throw ShapeError("critic_update: batch size != N");
  const Vector y = critic_targets(b, n, cfg, action_bound, rng);
  const Matrix target(y.size(), 1, y);
  const Matrix x = hconcat(b.s, b.a);
  double total = 0.0;
  auto regress = [&](MLPParams& critic, AdamState& opt) {
    auto fwd = mlp_forward(critic, x);
    auto [loss, grad] = mse_loss(fwd.output, target);
    auto back = mlp_backward(critic, fwd.tape, grad);
    adam_step(critic, back.grads, opt);
    total += loss;
  };
  regress(n.critic1, n.critic1_opt);
  regress(n.critic2, n.critic2_opt);
  return 0.5 * total;
}

// ---------------------------------------------------------------------------
// Actor

struct ActorGradient {
  LossReport report;
  /// Full weighted objective at the current parameters.
  double loss = 0.0;
  MLPGrads grads;
};

/// Gradient of
///   (1/N) sum_i w_i |ref_i - pi(s_i)|^2  -  q_weight * (1/N) sum_i Q1(s_i, pi(s_i))
/// with respect to the actor. With `ref == nullptr` the BC term is absent.
/// The report carries the unweighted terms: actor_q_term = mean Q1,
/// bc_term = mean of |ref - pi|^2 over active samples.
inline ActorGradient actor_gradient(const Matrix& states, const Networks& n, const Matrix* ref,
                                    std::span<const double> bc_weights, double q_weight) {
  const std::size_t batch = states.rows();
  const std::size_t obs_dim = states.cols();
  if (ref && (ref->rows() != batch || bc_weights.size() != batch)) {
    throw ShapeError("actor update: reference actions or weights do not match the batch");
  }
  const double inv_n = 1.0 / static_cast<double>(batch);

  auto actor_fwd = mlp_forward(n.actor, states);
  const Matrix& act = actor_fwd.output;
  const std::size_t act_dim = act.cols();
  auto critic_fwd = mlp_forward(n.critic1, hconcat(states, act));

  ActorGradient out;
  LossReport& rep = out.report;
  for (double q : critic_fwd.output.data()) rep.actor_q_term += q;
  rep.actor_q_term *= inv_n;
  out.loss = -q_weight * rep.actor_q_term;

  Matrix dq(batch, 1, -q_weight * inv_n);
  const Matrix dx = mlp_input_grad(n.critic1, critic_fwd.tape, dq);
  Matrix da = slice_cols(dx, obs_dim, act_dim);

  if (ref) {
    if (ref->cols() != act_dim) throw ShapeError("actor update: reference action width");
    double bc_sum = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const double w = bc_weights[i];
      double sq = 0.0;
      for (std::size_t j = 0; j < act_dim; ++j) {
        const double diff = act(i, j) - (*ref)(i, j);
        sq += diff * diff;
        da(i, j) += 2.0 * w * diff * inv_n;
      }
      weighted += w * sq;
      if (w != 0.0) {
        bc_sum += sq;
        ++rep.bc_active;
      }
    }
    out.loss += weighted * inv_n;
    rep.bc_term = rep.bc_active ? bc_sum / static_cast<double>(rep.bc_active) : 0.0;
  }

  out.grads = mlp_backward(n.actor, actor_fwd.tape, da).grads;
  rep.delta = q_weight;
  return out;
}

/// One Adam step on the actor along `actor_gradient`.
inline LossReport actor_update_weighted(const Matrix& states, Networks& n, const Matrix* ref,
                                        std::span<const double> bc_weights, double q_weight) {
  auto g = actor_gradient(states, n, ref, bc_weights, q_weight);
  adam_step(n.actor, g.grads, n.actor_opt);
  g.report.actor_updated = true;
  return g.report;
}

/// Ascend mean Q1(s, pi(s)).
inline LossReport actor_update_td3(const Batch& b, Networks& n) {
  auto rep = actor_update_weighted(b.s, n, nullptr, {}, 1.0);
  rep.epsilon = 0.0;
  return rep;
}

/// eps(t) * BC toward G - delta(t) * Q, with eps/delta from the schedule.
inline LossReport actor_update_td3fg(const Batch& b, Networks& n, const ReferenceGenerator& g,
                                     double t, const ScheduleConfig& sched) {
  const double eps = epsilon(t, sched);
  const double del = delta(t, sched);
  const Matrix ref = g.act(b.s);
  const Vector w(b.size(), eps);
  auto rep = actor_update_weighted(b.s, n, &ref, w, del);
  rep.epsilon = eps;
  return rep;
}

/// Per-sample indicator Q1(s, G(s)) > Q1(s, pi(s)).
inline Vector qfilter_mask(const Matrix& states, const Networks& n, const Matrix& ref) {
  const Matrix act = mlp_predict(n.actor, states);
  const Matrix q_ref = mlp_predict(n.critic1, hconcat(states, ref));
  const Matrix q_pi = mlp_predict(n.critic1, hconcat(states, act));
  Vector mask(states.rows());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = q_ref.data()[i] > q_pi.data()[i] ? 1.0 : 0.0;
  }
  return mask;
}

/// BC term applied only where the critic prefers the generator's action.
inline LossReport actor_update_qfilter(const Batch& b, Networks& n, const ReferenceGenerator& g) {
  const Matrix ref = g.act(b.s);
  const Vector mask = qfilter_mask(b.s, n, ref);
  auto rep = actor_update_weighted(b.s, n, &ref, mask, 1.0);
  rep.epsilon = 1.0;
  return rep;
}

inline void soft_update_targets(Networks& n, double tau) {
  soft_update(n.actor_target, n.actor, tau);
  soft_update(n.critic1_target, n.critic1, tau);
  soft_update(n.critic2_target, n.critic2, tau);
}

/// Owns the update schedule: one critic step per call, actor and target
/// updates every `policy_delay` calls.
class Learner {
 public:
  Learner(Networks nets, AgentConfig cfg, double action_bound, const ReferenceGenerator* g,
          std::uint64_t seed)
      : nets_(std::move(nets)),
        cfg_(std::move(cfg)),
        bound_(action_bound),
        generator_(g),
        smoothing_rng_(make_rng(seed, 13)) {
    if (traits(cfg_.variant).objective != ActorObjective::MaximizeQ && !generator_) {
      throw ConfigError("variant '" + to_string(cfg_.variant) + "' needs a generator");
    }
  }

  LossReport update(const Batch& b, double t) {
    LossReport rep;
    rep.critic_loss = critic_update(b, nets_, cfg_, bound_, smoothing_rng_);
    ++critic_updates_;
    if (critic_updates_ % cfg_.policy_delay != 0) return rep;
    LossReport a;
    switch (traits(cfg_.variant).objective) {
      case ActorObjective::MaximizeQ: a = actor_update_td3(b, nets_); break;
      case ActorObjective::Scheduled:
        a = actor_update_td3fg(b, nets_, *generator_, t, cfg_.schedule);
        break;
      case ActorObjective::QFiltered: a = actor_update_qfilter(b, nets_, *generator_); break;
    }
    a.critic_loss = rep.critic_loss;
    soft_update_targets(nets_, cfg_.tau);
    return a;
  }

  Networks& nets() noexcept { return nets_; }
  const Networks& nets() const noexcept { return nets_; }
  std::size_t critic_updates() const noexcept { return critic_updates_; }

 private:
  Networks nets_;
  AgentConfig cfg_;
  double bound_;
  const ReferenceGenerator* generator_;
  Rng smoothing_rng_;
  std::size_t critic_updates_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;
  Vector returns;
  /// Mean over episodes of each final-step info value.
  std::map<std::string, double> final_info;
};

/// Noiseless greedy rollouts; episode k starts from reset(derive_seed(seed, k)).
inline EvalResult evaluate(const std::string& env_name, const MLPParams& actor,
                           std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("evaluate: episodes must be >= 1");
  auto env = make_env(env_name);
  const auto& spec = env->spec();
  if (actor.in_dim() != spec.obs_dim || actor.out_dim() != spec.act_dim) {
    throw ShapeError("evaluate: actor dims do not match env '" + env_name + "'");
  }
  const PolicyFn policy = [&](std::span<const double> o) { return mlp_predict(actor, o); };
  EvalResult r;
  for (std::size_t k = 0; k < episodes; ++k) {
    const Trajectory t =
        rollout(*env, policy, nullptr, spec.max_episode_steps, derive_seed(seed, k));
    r.returns.push_back(t.total_return);
    for (const auto& [key, v] : t.final_info) r.final_info[key] += v;
  }
  const double n = static_cast<double>(episodes);
  for (double v : r.returns) r.mean += v;
  r.mean /= n;
  if (episodes > 1) {
    double ss = 0.0;
    for (double v : r.returns) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  for (auto& [key, v] : r.final_info) v /= n;
  return r;
}

// ---------------------------------------------------------------------------
// Training loop

struct MetricsRow {
  std::uint64_t step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double critic_loss = 0.0;
  double actor_q_term = 0.0;
  double bc_term = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainOptions {
  std::size_t total_steps = 30000;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 10;
};

struct TrainResult {
  Networks nets;
  std::vector<MetricsRow> metrics;
};

/// Schedule weights a variant actually applies at step t: (alpha, beta, eps, delta).
struct AppliedWeights {
  double alpha, beta, epsilon, delta;
};

inline AppliedWeights applied_weights(Variant v, double t, const ScheduleConfig& s) {
  const auto tr = traits(v);
  AppliedWeights w{1.0, 0.0, 0.0, 1.0};
  if (tr.generator_noise) {
    w.alpha = alpha(t, s);
    w.beta = beta(t, s);
  }
  if (tr.objective == ActorObjective::Scheduled) {
    w.epsilon = epsilon(t, s);
    w.delta = delta(t, s);
  } else if (tr.objective == ActorObjective::QFiltered) {
    w.epsilon = 1.0;
  }
  return w;
}

/// Fail fast on missing prerequisites, before any environment step.
inline void check_prerequisites(const std::string& env_name, const AgentConfig& cfg,
                                const ReferenceGenerator* g, const DemoSet* demos) {
  const auto tr = traits(cfg.variant);
  const EnvSpec spec = env_spec(env_name);
  const std::string v = to_string(cfg.variant);
  if (tr.needs_generator) {
    if (!g || !g->valid()) throw ConfigError("variant '" + v + "' requires a generator");
    if (g->params().in_dim() != spec.obs_dim || g->params().out_dim() != spec.act_dim) {
      throw ConfigError("generator dims do not match env '" + env_name + "'");
    }
    if (tr.actor_from_generator) {
      std::vector<std::size_t> dims{spec.obs_dim};
      dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
      dims.push_back(spec.act_dim);
      const auto& p = g->params();
      if (p.dims() != dims || p.hidden_activation != cfg.hidden_activation ||
          p.output_activation != OutputActivation::Tanh || p.output_scale != spec.action_bound) {
        throw ConfigError("generator architecture does not match the actor; cannot fine-tune");
      }
    }
  }
  if (tr.needs_demos) {
    if (!demos || demos->trajectories.empty()) {
      throw ConfigError("variant '" + v + "' requires demonstrations");
    }
    if (demos->env != env_name) {
      throw ConfigError("demos were recorded on '" + demos->env + "', not '" + env_name + "'");
    }
  }
}

using MetricsCallback = std::function<void(const MetricsRow&)>;

inline TrainResult train(const std::string& env_name, const AgentConfig& cfg,
                         const TrainOptions& opts, const ReferenceGenerator* g,
                         const DemoSet* demos, std::uint64_t seed,
                         const MetricsCallback& on_row = {}) {
  cfg.validate();
  if (opts.total_steps == 0 || opts.eval_interval == 0 || opts.eval_episodes == 0) {
    throw ConfigError("train: steps, eval interval and eval episodes must be positive");
  }
  if (cfg.schedule.tmax != opts.total_steps) {
    throw ConfigError("train: schedule Tmax must equal the total step budget");
  }
  check_prerequisites(env_name, cfg, g, demos);
  const auto tr = traits(cfg.variant);
  const auto clock_start = std::chrono::steady_clock::now();

  auto env = make_env(env_name);
  const EnvSpec spec = env->spec();
  Rng init_rng = make_rng(seed, 10);
  Networks nets = make_networks(spec, cfg, init_rng);
  if (tr.actor_from_generator) init_actor_from(nets, g->params(), cfg);
  const ReferenceGenerator* guide = tr.needs_generator ? g : nullptr;
  Learner learner(std::move(nets), cfg, spec.action_bound, guide, seed);

  ReplayBuffer buffer(cfg.buffer_capacity, spec.obs_dim, spec.act_dim);
  if (tr.needs_demos) {
    for (const auto& t : flatten_transitions(*demos, cfg.demo_transitions)) {
      buffer.push_protected(t);
    }
  }

  OUState ou(spec.act_dim, cfg.noise, derive_seed(seed, 11));
  Rng sample_rng = make_rng(seed, 12);
  Rng warmup_rng = make_rng(seed, 14);
  std::uniform_real_distribution<double> warmup_dist(-spec.action_bound, spec.action_bound);
  const std::uint64_t eval_seed = derive_seed(seed, 15);
  const std::size_t warmup = tr.warmup ? cfg.warmup_steps : 0;

  std::uint64_t episode = 0;
  Vector obs = env->reset(derive_seed(seed, 100000 + episode));
  ou.reset();

  TrainResult result;
  double sum_critic = 0.0, sum_q = 0.0, sum_bc = 0.0;
  std::size_t n_critic = 0, n_actor = 0;

  for (std::size_t t = 0; t < opts.total_steps; ++t) {
    const double td = static_cast<double>(t);
    Vector a;
    if (t < warmup) {
      a.resize(spec.act_dim);
      for (auto& v : a) v = warmup_dist(warmup_rng);
    } else {
      a = mlp_predict(learner.nets().actor, obs);
      const Vector n = tr.generator_noise ? composite_noise(td, obs, ou, *g, cfg.schedule)
                                          : ou_step(ou);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += n[i];
      a = clip_action(a, spec.action_bound);
    }
    StepResult sr = env->step(a);
    buffer.push({obs, a, sr.reward, sr.observation, sr.terminal, false});
    obs = std::move(sr.observation);
    if (sr.done) {
      ++episode;
      obs = env->reset(derive_seed(seed, 100000 + episode));
      ou.reset();
    }

    if (t >= warmup && buffer.size() >= cfg.batch_size) {
      const Batch b = buffer.sample(cfg.batch_size, sample_rng);
      const LossReport rep = learner.update(b, td);
      sum_critic += rep.critic_loss;
      ++n_critic;
      if (rep.actor_updated) {
        sum_q += rep.actor_q_term;
        sum_bc += rep.bc_term;
        ++n_actor;
      }
    }

    if ((t + 1) % opts.eval_interval == 0 || t + 1 == opts.total_steps) {
      const EvalResult ev =
          evaluate(env_name, learner.nets().actor, opts.eval_episodes, eval_seed);
      const AppliedWeights w = applied_weights(cfg.variant, td, cfg.schedule);
      MetricsRow row;
      row.step = t + 1;
      row.eval_return_mean = ev.mean;
      row.eval_return_std = ev.std;
      row.critic_loss = n_critic ? sum_critic / double(n_critic) : 0.0;
      row.actor_q_term = n_actor ? sum_q / double(n_actor) : 0.0;
      row.bc_term = n_actor ? sum_bc / double(n_actor) : 0.0;
      row.epsilon = w.epsilon;
      row.delta = w.delta;
      row.alpha = w.alpha;
      row.beta = w.beta;
      row.wall_clock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
      result.metrics.push_back(row);
      if (on_row) on_row(row);
      sum_critic = sum_q = sum_bc = 0.0;
      n_critic = n_actor = 0;
    }
  }
  result.nets = std::move(learner.nets());
  return result;
}

}  // namespace td3fg
