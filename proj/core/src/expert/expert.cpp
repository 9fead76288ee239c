#include "okd/expert/expert.hpp"

#include <algorithm>
#include <cmath>

#include "okd/errors.hpp"

namespace okd::expert {

using sim::Action;
using sim::Vec2;

namespace {

constexpr double kMinSurfaceDistance = 1e-6;

Vec2 clamp_norm(Vec2 v, double max_norm) {
  const double n = v.norm();
  if (n > max_norm) return v * (max_norm / n);
  return v;
}

}  // namespace

void validate(const ExpertConfig& cfg) {
  if (!(cfg.k_att > 0 && cfg.k_rep > 0 && cfg.rep_range > 0 && cfg.v_max > 0 &&
        cfg.omega_max > 0 && cfg.k_psi > 0)) {
    throw ConfigError("expert gains must all be positive");
  }
  if (!(cfg.rep_range > cfg.robot_radius)) {
    throw ConfigError("expert rep_range must exceed robot_radius");
  }
}

std::vector<RelativeObstacle> relative_obstacles(const sim::SceneLayout& layout,
                                                 const sim::Pose& pose, bool include_walls) {
  std::vector<RelativeObstacle> out;
  out.reserve(layout.obstacles.size() + 4);
  const Vec2 p = pose.position();
  for (const auto& o : layout.obstacles) {
    out.push_back({sim::rotate(o.center - p, -pose.psi), o.radius});
  }
  if (include_walls) {
    const double h = layout.arena_half_extent;
    for (const Vec2 foot : {Vec2{h, p.y}, Vec2{-h, p.y}, Vec2{p.x, h}, Vec2{p.x, -h}}) {
      out.push_back({sim::rotate(foot - p, -pose.psi), 0.0});
    }
  }
  return out;
}

Action expert_action(const std::vector<RelativeObstacle>& obstacles, Vec2 goal_local,
                     const ExpertConfig& cfg) {
  Vec2 v = goal_local * cfg.k_att;
  for (const auto& o : obstacles) {
    const double center_dist = o.offset.norm();
    const double s = std::max(center_dist - o.radius, kMinSurfaceDistance);
    if (s >= cfg.rep_range || center_dist <= 0.0) continue;
    const double mag = cfg.k_rep * (1.0 / s - 1.0 / cfg.rep_range) / (s * s);
    v += o.offset * (-mag / center_dist);
  }
  v = clamp_norm(v, cfg.v_max);
  const double heading = (goal_local.x == 0.0 && goal_local.y == 0.0)
                             ? 0.0
                             : std::atan2(goal_local.y, goal_local.x);
  const double omega = std::clamp(cfg.k_psi * heading, -cfg.omega_max, cfg.omega_max);
  return {v.x, v.y, omega};
}

ExpertPolicy::ExpertPolicy(ExpertConfig cfg) : cfg_(cfg) { validate(cfg_); }

Action ExpertPolicy::act(const sim::StepInput& in) {
  const auto obstacles = relative_obstacles(in.layout, in.pose, cfg_.wall_repulsion);
  Action a = expert_action(obstacles, in.goal_local, cfg_);
  const double speed = std::hypot(a.vx, a.vy);
  const double dist = in.goal_local.norm();

  if (escape_steps_ > 0) {
    if (escape_start_distance_ - dist >= cfg_.escape_progress ||
        escape_steps_ >= cfg_.escape_max_steps) {
      escape_steps_ = 0;
      stall_ = 0;
    }
  } else if (dist > cfg_.success_radius && speed < cfg_.stall_speed_fraction * cfg_.v_max) {
    if (++stall_ >= cfg_.stall_steps) {
      escape_start_distance_ = dist;
      // Tangent to the goal bearing, frozen in the world frame for the whole escape.
      const Vec2 bearing = sim::rotate(in.goal_local * (1.0 / dist), in.pose.psi);
      escape_dir_world_ = {-bearing.y, bearing.x};
      escape_steps_ = 1;
    }
  } else {
    stall_ = 0;
  }

  if (escape_steps_ > 0) {
    ++escape_steps_;
    // Repulsion only, plus the fixed tangential bias: slide along the trap.
    ExpertConfig no_pull = cfg_;
    no_pull.k_att = 0.0;
    const Action rep = expert_action(obstacles, in.goal_local, no_pull);
    const Vec2 tangent = sim::rotate(escape_dir_world_, -in.pose.psi);
    const Vec2 v = clamp_norm(Vec2{rep.vx, rep.vy} + tangent * (cfg_.escape_speed_fraction * cfg_.v_max),
                              cfg_.v_max);
    a.vx = v.x;
    a.vy = v.y;
  }
  return a;
}

}  // namespace okd::expert
