#pragma once

#include <random>

#include "okd/sim/types.hpp"

namespace okd::sim {

enum class SurfaceKind { Obstacle, Wall, Background };

struct RayHit {
  double distance = 0.0;  // unclamped
  SurfaceKind kind = SurfaceKind::Background;
  std::uint32_t appearance_id = 0;
};

/// Nearest intersection of the ray origin + t * (cos angle, sin angle), t >= 0,
/// with any obstacle circle or arena wall.
RayHit cast_ray(const SceneLayout& layout, Vec2 origin, double angle);

/// Renders all cameras of the rig at pose. Depth is clamped to d_max; colour is
/// the hit surface colour scaled by 1 / (1 + depth / d_shade).
/// Throws RenderFromCollisionError when the pose is inside an obstacle or outside the arena.
Observation raycast(const SceneLayout& layout, const AppearanceSkin& skin, const Pose& pose,
                    const CameraRig& rig, double d_max = 6.0, double d_shade = 2.0);

/// Multiplies every depth entry by (1 + sigma * N(0,1)), re-clamped to (0, d_max].
void apply_depth_noise(Observation& obs, double sigma, double d_max, std::mt19937_64& rng);

struct StepResult {
  Pose pose;
  bool collided = false;
};

/// Euler step of holonomic kinematics; local velocities are rotated by psi into
/// the world frame. The action is expected to be clamped already.
StepResult step_dynamics(const Pose& pose, const Action& action, double dt,
                         const SceneLayout& layout, double robot_radius);

/// True when a robot disc at p overlaps an obstacle or leaves the arena.
bool in_collision(const SceneLayout& layout, Vec2 p, double robot_radius);

/// Goal position at time t expressed in the robot's local frame.
Vec2 goal_local(const Pose& pose, const GoalSpec& goal, double t);

/// -alpha * |d| - 10 [hit obstacle] - 10 [hit boundary]
double reward(double distance_to_goal, bool hit_obstacle, bool hit_boundary, double alpha = 1.0);

}  // namespace okd::sim
