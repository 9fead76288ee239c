#pragma once

#include <vector>

#include "okd/sim/rollout.hpp"
#include "okd/sim/types.hpp"

namespace okd::expert {

/// Gains of the potential-field expert. Velocities are in the robot's local frame.
struct ExpertConfig {
  double k_att = 1.5;      // 1/s
  double k_rep = 0.04;     // m^2/s
  double rep_range = 0.5;  // m, measured from the robot centre to an obstacle surface
  double v_max = 1.0;
  double omega_max = 2.0;
  double k_psi = 2.0;  // 1/s
  double robot_radius = 0.15;
  double success_radius = 0.3;
  // Local-minimum escape.
  double stall_speed_fraction = 0.05;
  int stall_steps = 30;
  double escape_speed_fraction = 0.3;
  double escape_progress = 0.2;  // m of goal-distance gain that ends an escape
  int escape_max_steps = 60;
  // Arena walls repel like obstacles of zero radius at their nearest point.
  bool wall_repulsion = true;
};

/// Throws ConfigError unless all gains are positive and rep_range > robot_radius.
void validate(const ExpertConfig& cfg);

struct RelativeObstacle {
  sim::Vec2 offset;  // obstacle centre minus robot position, local frame
  double radius = 0.0;
};

/// Obstacles in the robot frame; with include_walls, each arena wall adds a
/// zero-radius entry at its point nearest the robot.
std::vector<RelativeObstacle> relative_obstacles(const sim::SceneLayout& layout,
                                                 const sim::Pose& pose,
                                                 bool include_walls = false);

/// Attractive pull k_att * goal plus, for every obstacle whose surface is
/// closer than rep_range, a push k_rep (1/s - 1/rep_range) / s^2 away from it.
/// The velocity vector is clamped to v_max; omega steers toward the goal.
sim::Action expert_action(const std::vector<RelativeObstacle>& obstacles, sim::Vec2 goal_local,
                          const ExpertConfig& cfg);

/// The expert as a closed-loop policy. Holds the per-episode stall counter;
/// after stall_steps slow steps away from the goal it adds a tangential bias
/// until the goal distance has shrunk by escape_progress (or escape_max_steps pass).
class ExpertPolicy final : public sim::Policy {
 public:
  explicit ExpertPolicy(ExpertConfig cfg = {});

  void reset() override {
    stall_ = 0;
    escape_steps_ = 0;
  }
  sim::Action act(const sim::StepInput& in) override;

  const ExpertConfig& config() const { return cfg_; }
  bool escaping() const { return escape_steps_ > 0; }

 private:
  ExpertConfig cfg_;
  int stall_ = 0;
  int escape_steps_ = 0;  // > 0 while the tangential bias is applied
  double escape_start_distance_ = 0.0;
  sim::Vec2 escape_dir_world_;
};

}  // namespace okd::expert
