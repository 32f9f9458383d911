#pragma once

// Physical constants for the built-in environments. All envs integrate with
// semi-implicit Euler: velocity first, then position from the new velocity.

#include <cstddef>
#include <numbers>

namespace td3fg::constants {

inline constexpr double kDt = 0.05;

namespace point_reach {
inline constexpr std::size_t kMaxSteps = 200;
inline constexpr double kActionBound = 1.0;
// Unit mass; an action of 1 applies kForceGain newtons.
inline constexpr double kForceGain = 5.0;
inline constexpr double kDrag = 0.1;
inline constexpr double kArenaHalfWidth = 2.0;
inline constexpr double kSuccessRadius = 0.05;
// Added to -distance on every step spent inside the success radius.
inline constexpr double kSuccessBonus = 10.0;
inline constexpr double kGoalRadius = 1.0;
// Farthest possible point-goal separation: arena corner to goal disk edge.
inline constexpr double kRewardMin = -(kArenaHalfWidth * std::numbers::sqrt2 + kGoalRadius);
inline constexpr double kRewardMax = kSuccessBonus;
}  // namespace point_reach

namespace latch_door {
inline constexpr std::size_t kMaxSteps = 300;
inline constexpr double kActionBound = 1.0;
// Latch: spring-loaded toward closed; must be held past the threshold.
inline constexpr double kLatchGain = 6.6;
inline constexpr double kLatchSpring = 6.0;
inline constexpr double kLatchDamping = 3.0;
inline constexpr double kLatchMax = 1.2;
inline constexpr double kLatchThreshold = 0.8;
// Door hinge: torque acts only while the latch is above threshold.
inline constexpr double kDoorGain = 2.0;
inline constexpr double kDoorDamping = 1.0;
inline constexpr double kDoorMax = std::numbers::pi / 2.0;
inline constexpr double kDoorOpen = 1.5;
inline constexpr double kOpenBonus = 5.0;
// Handle lever arm, drawn per episode; scales door torque.
inline constexpr double kHandleMin = 0.5;
inline constexpr double kHandleMax = 1.0;
inline constexpr double kRewardMin = 0.0;
inline constexpr double kRewardMax = kDoorMax + kOpenBonus;
}  // namespace latch_door

namespace pendulum {
inline constexpr std::size_t kMaxSteps = 200;
inline constexpr double kActionBound = 2.0;
inline constexpr double kGravity = 10.0;
inline constexpr double kMass = 1.0;
inline constexpr double kLength = 1.0;
inline constexpr double kMaxSpeed = 8.0;
inline constexpr double kRewardMin =
    -(std::numbers::pi * std::numbers::pi + 0.1 * kMaxSpeed * kMaxSpeed +
      0.001 * kActionBound * kActionBound);
inline constexpr double kRewardMax = 0.0;
}  // namespace pendulum

}  // namespace td3fg::constants
