#pragma once

// Deterministic continuous-control environments with a reset/step interface.
//
//   point-reach  2-D point mass driven to a goal in the unit disk.
//                obs [px, py, vx, vy, gx, gy], act force (2),
//                r = -|pos - goal|, +10 within the success radius.
//   latch-door   spring-loaded latch that must be held past 0.8 rad before the
//                door hinge responds to torque.
//                obs [latch, door, latch_vel, door_vel, handle], act torques (2),
//                r = door + 5 while the door is fully open.
//   pendulum     underactuated swing-up; obs [cos, sin, vel], act torque (1).
//
// Constants live in envs/constants.hpp.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "td3fg/envs/constants.hpp"
#include "td3fg/error.hpp"
#include "td3fg/rng.hpp"
#include "td3fg/tensor.hpp"
#include "td3fg/trajectory.hpp"

namespace td3fg {

struct EnvSpec {
  std::string name;
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  double action_bound = 1.0;
  std::size_t max_episode_steps = 1;
  double dt = constants::kDt;
  double reward_min = 0.0;
  double reward_max = 0.0;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;
  /// terminal || truncated
  bool done = false;
  bool terminal = false;
  /// Step limit reached; not a true terminal for bootstrapping.
  bool truncated = false;
  std::map<std::string, double> info;
};

inline Vector clip_action(std::span<const double> a, double bound) {
  Vector out(a.begin(), a.end());
  for (auto& v : out) v = std::clamp(v, -bound, bound);
  return out;
}

class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  /// Draw an initial state from `seed` alone and zero the step counter.
  Vector reset(std::uint64_t seed) {
    Rng rng(mix_seed(seed));
    init_state(rng);
    steps_ = 0;
    finished_ = false;
    return observe();
  }

  StepResult step(std::span<const double> action) {
    const auto& s = spec();
    if (action.size() != s.act_dim) {
      throw ShapeError(s.name + ": action length " + std::to_string(action.size()) +
                       " != act_dim " + std::to_string(s.act_dim));
    }
    for (double a : action) {
      if (std::isnan(a)) throw InputError(s.name + ": NaN action");
    }
    if (finished_) throw InputError(s.name + ": step after episode end; call reset");
    const Vector a = clip_action(action, s.action_bound);
    StepResult r = integrate(a);
    ++steps_;
    r.truncated = !r.terminal && steps_ >= s.max_episode_steps;
    r.done = r.terminal || r.truncated;
    finished_ = r.done;
    r.observation = observe();
    return r;
  }

  std::size_t steps() const noexcept { return steps_; }
  virtual Vector observe() const = 0;

 protected:
  virtual void init_state(Rng& rng) = 0;
  /// Advance one dt with an already clipped action; fill reward, terminal, info.
  virtual StepResult integrate(const Vector& action) = 0;

 private:
  std::size_t steps_ = 0;
  bool finished_ = false;
};

class PointReach final : public Env {
 public:
  static EnvSpec make_spec() {
    namespace c = constants::point_reach;
    return {"point-reach", 6, 2, c::kActionBound, c::kMaxSteps, constants::kDt, c::kRewardMin,
            c::kRewardMax};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointReach>(*this); }

  Vector observe() const override {
    return {pos_[0], pos_[1], vel_[0], vel_[1], goal_[0], goal_[1]};
  }

  /// Direct state access for tests and scripted controllers.
  void set_state(std::array<double, 2> pos, std::array<double, 2> vel,
                 std::array<double, 2> goal) {
    pos_ = pos;
    vel_ = vel;
    goal_ = goal;
  }

  double distance() const { return std::hypot(pos_[0] - goal_[0], pos_[1] - goal_[1]); }

 protected:
  void init_state(Rng& rng) override {
    namespace c = constants::point_reach;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double radius = c::kGoalRadius * std::sqrt(u(rng));
    const double angle = 2.0 * std::numbers::pi * u(rng);
    pos_ = {0.0, 0.0};
    vel_ = {0.0, 0.0};
    goal_ = {radius * std::cos(angle), radius * std::sin(angle)};
  }

  StepResult integrate(const Vector& a) override {
    namespace c = constants::point_reach;
    for (std::size_t i = 0; i < 2; ++i) {
      vel_[i] += spec_.dt * (c::kForceGain * a[i] - c::kDrag * vel_[i]);
      pos_[i] += spec_.dt * vel_[i];
      if (std::abs(pos_[i]) > c::kArenaHalfWidth) {
        pos_[i] = std::clamp(pos_[i], -c::kArenaHalfWidth, c::kArenaHalfWidth);
        vel_[i] = 0.0;
      }
    }
    StepResult r;
    const double d = distance();
    const bool success = d < c::kSuccessRadius;
    r.reward = -d + (success ? c::kSuccessBonus : 0.0);
    r.info["distance"] = d;
    r.info["success"] = success ? 1.0 : 0.0;
    return r;
  }

 private:
  EnvSpec spec_ = make_spec();
  std::array<double, 2> pos_{}, vel_{}, goal_{};
};

class LatchDoor final : public Env {
 public:
  static EnvSpec make_spec() {
    namespace c = constants::latch_door;
    return {"latch-door", 5, 2, c::kActionBound, c::kMaxSteps, constants::kDt, c::kRewardMin,
            c::kRewardMax};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<LatchDoor>(*this); }

  Vector observe() const override { return {latch_, door_, latch_vel_, door_vel_, handle_}; }

  double latch() const noexcept { return latch_; }
  double door() const noexcept { return door_; }

 protected:
  void init_state(Rng& rng) override {
    namespace c = constants::latch_door;
    std::uniform_real_distribution<double> u(c::kHandleMin, c::kHandleMax);
    latch_ = door_ = latch_vel_ = door_vel_ = 0.0;
    handle_ = u(rng);
  }

  StepResult integrate(const Vector& a) override {
    namespace c = constants::latch_door;
    const double dt = spec_.dt;
    latch_vel_ += dt * (c::kLatchGain * a[0] - c::kLatchSpring * latch_ -
                        c::kLatchDamping * latch_vel_);
    latch_ += dt * latch_vel_;
    if (latch_ < 0.0) {
      latch_ = 0.0;
      latch_vel_ = 0.0;
    } else if (latch_ > c::kLatchMax) {
      latch_ = c::kLatchMax;
      latch_vel_ = 0.0;
    }
    const bool unlatched = latch_ > c::kLatchThreshold;
    const double torque = unlatched ? c::kDoorGain * handle_ * a[1] : 0.0;
    door_vel_ += dt * (torque - c::kDoorDamping * door_vel_);
    door_ += dt * door_vel_;
    if (door_ < 0.0) {
      door_ = 0.0;
      door_vel_ = 0.0;
    } else if (door_ > c::kDoorMax) {
      door_ = c::kDoorMax;
      door_vel_ = 0.0;
    }
    StepResult r;
    const bool open = door_ >= c::kDoorOpen;
    r.reward = door_ + (open ? c::kOpenBonus : 0.0);
    r.info["latch"] = latch_;
    r.info["door"] = door_;
    r.info["unlatched"] = unlatched ? 1.0 : 0.0;
    r.info["open"] = open ? 1.0 : 0.0;
    return r;
  }

 private:
  EnvSpec spec_ = make_spec();
  double latch_ = 0.0, door_ = 0.0, latch_vel_ = 0.0, door_vel_ = 0.0, handle_ = 0.75;
};

class Pendulum final : public Env {
 public:
  static EnvSpec make_spec() {
    namespace c = constants::pendulum;
    return {"pendulum", 3, 1, c::kActionBound, c::kMaxSteps, constants::kDt, c::kRewardMin,
            c::kRewardMax};
  }

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<Pendulum>(*this); }

  Vector observe() const override { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

  /// theta = 0 is upright.
  void set_state(double theta, double theta_dot) {
    theta_ = theta;
    theta_dot_ = theta_dot;
  }

  static double wrap_angle(double x) {
    return std::remainder(x, 2.0 * std::numbers::pi);
  }

 protected:
  void init_state(Rng& rng) override {
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> vel(-1.0, 1.0);
    theta_ = ang(rng);
    theta_dot_ = vel(rng);
  }

  StepResult integrate(const Vector& a) override {
    namespace c = constants::pendulum;
    const double u = a[0];
    const double th = wrap_angle(theta_);
    StepResult r;
    r.reward = -(th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);
    const double acc = 3.0 * c::kGravity / (2.0 * c::kLength) * std::sin(theta_) +
                       3.0 / (c::kMass * c::kLength * c::kLength) * u;
    theta_dot_ = std::clamp(theta_dot_ + spec_.dt * acc, -c::kMaxSpeed, c::kMaxSpeed);
    theta_ += spec_.dt * theta_dot_;
    r.info["angle"] = wrap_angle(theta_);
    return r;
  }

 private:
  EnvSpec spec_ = make_spec();
  double theta_ = std::numbers::pi, theta_dot_ = 0.0;
};

inline const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"point-reach", "latch-door", "pendulum"};
  return names;
}

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "point-reach") return std::make_unique<PointReach>();
  if (name == "latch-door") return std::make_unique<LatchDoor>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  throw ConfigError("unknown env '" + name + "' (known: point-reach, latch-door, pendulum)");
}

inline EnvSpec env_spec(const std::string& name) { return make_env(name)->spec(); }

using PolicyFn = std::function<Vector(std::span<const double> observation)>;
/// Additive exploration noise given (episode step, observation).
using NoiseFn = std::function<Vector(std::size_t step, std::span<const double> observation)>;

/// One episode from `reset(seed)`; actions are clip(policy(s) + noise).
inline Trajectory rollout(Env& env, const PolicyFn& policy, const NoiseFn* noise,
                          std::size_t max_steps, std::uint64_t seed) {
  const auto& spec = env.spec();
  Trajectory traj;
  traj.env = spec.name;
  Vector obs = env.reset(seed);
  for (std::size_t t = 0; t < max_steps; ++t) {
    Vector a = policy(obs);
    if (a.size() != spec.act_dim) throw ShapeError("rollout: policy output size mismatch");
    if (noise) {
      const Vector n = (*noise)(t, obs);
      if (n.size() != a.size()) throw ShapeError("rollout: noise size mismatch");
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += n[i];
    }
    a = clip_action(a, spec.action_bound);
    StepResult r = env.step(a);
    traj.total_return += r.reward;
    traj.steps.push_back({std::move(obs), std::move(a), r.reward, r.observation, r.terminal});
    obs = std::move(r.observation);
    traj.final_info = std::move(r.info);
    if (r.done) break;
  }
  return traj;
}

}  // namespace td3fg
