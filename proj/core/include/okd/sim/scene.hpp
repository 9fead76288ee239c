#pragma once

#include <cstdint>
#include <utility>

#include "okd/sim/types.hpp"

namespace okd::sim {

enum class GoalMode { Static, Circular, Mixed };

struct SceneGenOptions {
  double arena_half_extent = 2.0;
  double r_clear = 0.3;
  GoalMode goal_mode = GoalMode::Static;
  double orbit_radius = 1.0;
  double angular_speed = 0.5;
  double min_start_goal_distance = 2.0;
  double min_obstacle_gap = 0.4;  // free space kept between obstacle surfaces
  int attempt_budget = 2000;
};

struct CountRange {
  int min = 3;
  int max = 8;
};

/// Places circular obstacles with total area density_target * arena area,
/// then samples a start pose and a goal with clearance r_clear.
/// Throws RangeError when density_target is outside [0.05, 0.20] and
/// PlacementInfeasibleError when rejection sampling runs out of attempts.
SceneLayout generate_scene(std::uint64_t seed, double density_target, CountRange counts,
                           const SceneGenOptions& opts = {});

/// Empty arena with the given start and static goal.
SceneLayout empty_scene(Pose start, Vec2 goal, double arena_half_extent = 2.0);

/// New start/goal in an existing obstacle layout; same constraints as generate_scene.
SceneLayout resample_start_goal(const SceneLayout& layout, std::uint64_t seed,
                                const SceneGenOptions& opts = {});

/// Random skin: palette of n_ids colours drawn from [lo, hi]^3, seeded.
AppearanceSkin generate_skin(std::uint64_t seed, std::uint32_t n_ids, double lo = 0.05,
                             double hi = 1.0);

/// True when the start, and the goal over a full period, keep clearance r_clear.
bool endpoints_clear(const SceneLayout& layout, double r_clear);

}  // namespace okd::sim
