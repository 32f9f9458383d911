#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "td3fg/demos.hpp"
#include "td3fg/envs.hpp"

using namespace td3fg;
namespace pr = td3fg::constants::point_reach;
namespace ld = td3fg::constants::latch_door;

TEST(EnvRegistry, KnownAndUnknownNames) {
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    EXPECT_EQ(env->spec().name, name);
    EXPECT_GE(env->spec().obs_dim, 1u);
    EXPECT_GT(env->spec().action_bound, 0.0);
  }
  EXPECT_THROW(make_env("cartpole"), ConfigError);
  EXPECT_EQ(env_spec("point-reach").obs_dim, 6u);
  EXPECT_EQ(env_spec("latch-door").obs_dim, 5u);
  EXPECT_EQ(env_spec("latch-door").act_dim, 2u);
  EXPECT_EQ(env_spec("pendulum").obs_dim, 3u);
  EXPECT_EQ(env_spec("point-reach").max_episode_steps, 200u);
  EXPECT_EQ(env_spec("latch-door").max_episode_steps, 300u);
  EXPECT_EQ(env_spec("pendulum").max_episode_steps, 200u);
}

TEST(EnvReset, SameSeedSameObservation) {
  for (const auto& name : env_names()) {
    auto a = make_env(name), b = make_env(name);
    EXPECT_EQ(a->reset(42), b->reset(42));
    EXPECT_EQ(a->reset(7), a->reset(7));
  }
}

TEST(PointReach, ResetAtOriginGoalInUnitDisk) {
  PointReach env;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto o = env.reset(s);
    EXPECT_EQ(o[0], 0.0);
    EXPECT_EQ(o[1], 0.0);
    EXPECT_EQ(o[2], 0.0);
    EXPECT_EQ(o[3], 0.0);
    EXPECT_LE(std::hypot(o[4], o[5]), 1.0);
  }
}

TEST(PointReach, ZeroActionAtRestKeepsPosition) {
  PointReach env;
  env.reset(3);
  env.set_state({0.3, -0.2}, {0.0, 0.0}, {0.5, 0.5});
  auto r = env.step(Vector{0.0, 0.0});
  EXPECT_EQ(r.observation[0], 0.3);
  EXPECT_EQ(r.observation[1], -0.2);
  EXPECT_DOUBLE_EQ(r.reward, -std::hypot(0.3 - 0.5, -0.2 - 0.5));
  EXPECT_EQ(r.info.at("success"), 0.0);
}

TEST(PointReach, AtGoalEarnsOnlyTheBonus) {
  PointReach env;
  env.reset(0);
  env.set_state({0.4, 0.1}, {0.0, 0.0}, {0.4, 0.1});
  auto r = env.step(Vector{0.0, 0.0});
  EXPECT_EQ(r.reward, pr::kSuccessBonus);
  EXPECT_EQ(r.reward, env.spec().reward_max);
  EXPECT_EQ(r.info.at("success"), 1.0);
}

TEST(PointReach, BonusStopsAtSuccessRadius) {
  PointReach env;
  env.reset(0);
  env.set_state({0.049, 0.0}, {0.0, 0.0}, {0.0, 0.0});
  auto in = env.step(Vector{0.0, 0.0});
  EXPECT_DOUBLE_EQ(in.reward, -0.049 + pr::kSuccessBonus);
  EXPECT_EQ(in.info.at("success"), 1.0);
  env.set_state({0.051, 0.0}, {0.0, 0.0}, {0.0, 0.0});
  auto out = env.step(Vector{0.0, 0.0});
  EXPECT_DOUBLE_EQ(out.reward, -0.051);
  EXPECT_EQ(out.info.at("success"), 0.0);
}

TEST(PointReach, SemiImplicitEulerUpdate) {
  PointReach env;
  env.reset(0);
  env.set_state({0.0, 0.0}, {0.2, -0.1}, {1.0, 0.0});
  auto r = env.step(Vector{0.5, 2.0});  // second component clipped to 1
  const double dt = constants::kDt;
  const double vx = 0.2 + dt * (pr::kForceGain * 0.5 - pr::kDrag * 0.2);
  const double vy = -0.1 + dt * (pr::kForceGain * 1.0 - pr::kDrag * -0.1);
  EXPECT_DOUBLE_EQ(r.observation[2], vx);
  EXPECT_DOUBLE_EQ(r.observation[3], vy);
  EXPECT_DOUBLE_EQ(r.observation[0], dt * vx);
  EXPECT_DOUBLE_EQ(r.observation[1], dt * vy);
}

TEST(PointReach, ArenaWallStopsMotion) {
  PointReach env;
  env.reset(0);
  env.set_state({pr::kArenaHalfWidth - 1e-3, 0.0}, {3.0, 0.0}, {0.0, 0.0});
  auto r = env.step(Vector{1.0, 0.0});
  EXPECT_EQ(r.observation[0], pr::kArenaHalfWidth);
  EXPECT_EQ(r.observation[2], 0.0);
}

TEST(EnvStep, ErrorsOnBadActions) {
  PointReach env;
  env.reset(0);
  EXPECT_THROW(env.step(Vector{0.0}), ShapeError);
  EXPECT_THROW(env.step(Vector{std::nan(""), 0.0}), InputError);
}

TEST(EnvStep, EpisodeLengthAndTruncation) {
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    env->reset(1);
    const Vector zero(env->spec().act_dim, 0.0);
    StepResult r;
    std::size_t n = 0;
    do {
      r = env->step(zero);
      ++n;
    } while (!r.done);
    EXPECT_EQ(n, env->spec().max_episode_steps);
    EXPECT_TRUE(r.truncated);
    EXPECT_FALSE(r.terminal);
    EXPECT_THROW(env->step(zero), InputError);
  }
}

TEST(EnvStep, RewardsStayWithinDocumentedBounds) {
  Rng rng(9);
  for (const auto& name : env_names()) {
    auto env = make_env(name);
    const auto& spec = env->spec();
    std::uniform_real_distribution<double> u(-1.5 * spec.action_bound, 1.5 * spec.action_bound);
    for (int ep = 0; ep < 20; ++ep) {
      env->reset(ep);
      StepResult r;
      do {
        Vector a(spec.act_dim);
        for (auto& v : a) v = u(rng);
        r = env->step(a);
        EXPECT_GE(r.reward, spec.reward_min) << name;
        EXPECT_LE(r.reward, spec.reward_max) << name;
        EXPECT_EQ(r.observation.size(), spec.obs_dim);
      } while (!r.done);
    }
  }
}

TEST(EnvStep, SameSeedAndActionsGiveIdenticalTrajectories) {
  for (const auto& name : env_names()) {
    auto run = [&] {
      auto env = make_env(name);
      Rng rng(4);
      std::normal_distribution<double> g;
      PolicyFn pol = [&](std::span<const double>) {
        Vector a(env->spec().act_dim);
        for (auto& v : a) v = g(rng);
        return a;
      };
      return rollout(*env, pol, nullptr, 1000, 17);
    };
    EXPECT_EQ(run(), run());
  }
}

TEST(LatchDoor, ResetClosed) {
  LatchDoor env;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto o = env.reset(s);
    EXPECT_EQ(o[0], 0.0);
    EXPECT_EQ(o[1], 0.0);
    EXPECT_GE(o[4], ld::kHandleMin);
    EXPECT_LE(o[4], ld::kHandleMax);
  }
}

TEST(LatchDoor, PushingDoorWithLatchClosedDoesNothing) {
  LatchDoor env;
  env.reset(0);
  for (int i = 0; i < 300; ++i) {
    auto r = env.step(Vector{0.0, 1.0});
    EXPECT_EQ(r.observation[1], 0.0);
    EXPECT_EQ(r.reward, 0.0);
  }
}

TEST(LatchDoor, LatchSpringsBackWhenReleased) {
  LatchDoor env;
  env.reset(0);
  for (int i = 0; i < 60; ++i) env.step(Vector{1.0, 0.0});
  EXPECT_GT(env.latch(), ld::kLatchThreshold);
  for (int i = 0; i < 100; ++i) env.step(Vector{0.0, 0.0});
  EXPECT_LT(env.latch(), ld::kLatchThreshold);
}

TEST(LatchDoor, HoldingLatchAndPushingOpensDoor) {
  LatchDoor env;
  env.reset(5);
  StepResult r;
  for (int i = 0; i < 300 && !r.done; ++i) r = env.step(Vector{1.0, 1.0});
  EXPECT_EQ(r.info.at("open"), 1.0);
  EXPECT_NEAR(r.reward, env.door() + ld::kOpenBonus, 1e-15);
}

TEST(Pendulum, UprightAtRestIsMaximal) {
  Pendulum env;
  env.reset(0);
  env.set_state(0.0, 0.0);
  auto r = env.step(Vector{0.0});
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(r.observation[0], 1.0);
}

TEST(Pendulum, RewardUsesWrappedAngle) {
  Pendulum env;
  env.reset(0);
  env.set_state(2.0 * std::numbers::pi + 0.5, 1.0);
  auto r = env.step(Vector{1.0});
  EXPECT_NEAR(r.reward, -(0.25 + 0.1 + 0.001), 1e-12);
}

TEST(Rollout, ZeroPolicyZeroNoiseGivesZeroActions) {
  PointReach env;
  PolicyFn zero = [](std::span<const double>) { return Vector{0.0, 0.0}; };
  NoiseFn none = [](std::size_t, std::span<const double>) { return Vector{0.0, 0.0}; };
  auto t = rollout(env, zero, &none, 200, 3);
  EXPECT_EQ(t.size(), 200u);
  for (const auto& s : t.steps) EXPECT_EQ(s.action, (Vector{0.0, 0.0}));
}

TEST(Rollout, ActionsAreClippedPolicyPlusNoise) {
  PointReach env;
  PolicyFn pol = [](std::span<const double>) { return Vector{0.8, -0.2}; };
  NoiseFn noise = [](std::size_t, std::span<const double>) { return Vector{0.5, 0.1}; };
  auto t = rollout(env, pol, &noise, 5, 3);
  for (const auto& s : t.steps) {
    EXPECT_EQ(s.action[0], 1.0);
    EXPECT_DOUBLE_EQ(s.action[1], -0.1);
  }
}

TEST(Rollout, TrajectoryChainsAndSumsReturn) {
  LatchDoor env;
  PolicyFn pol = [](std::span<const double>) { return Vector{1.0, 0.5}; };
  auto t = rollout(env, pol, nullptr, 300, 8);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sum += t.steps[i].reward;
    if (i + 1 < t.size()) {
      EXPECT_EQ(t.steps[i].next_observation, t.steps[i + 1].observation);
    }
  }
  EXPECT_EQ(sum, t.total_return);
  EXPECT_LE(t.size(), 300u);
}

TEST(Rollout, ScriptedControllerReachesGoal) {
  PointReach env;
  const auto gains = nominal_gains("point-reach");
  PolicyFn pol = [&](std::span<const double> o) { return scripted_action("point-reach", o, gains); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = rollout(env, pol, nullptr, 200, seed);
    EXPECT_LT(t.final_info.at("distance"), 0.05) << "seed " << seed;
  }
}

TEST(Rollout, PolicyShapeMismatchThrows) {
  PointReach env;
  PolicyFn bad = [](std::span<const double>) { return Vector{0.0}; };
  EXPECT_THROW(rollout(env, bad, nullptr, 10, 0), ShapeError);
}
