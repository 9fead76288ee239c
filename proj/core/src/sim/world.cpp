#include "okd/sim/world.hpp"

#include <limits>
#include <sstream>

#include "okd/errors.hpp"

namespace okd::sim {

RayHit cast_ray(const SceneLayout& layout, Vec2 origin, double angle) {
  const Vec2 d{std::cos(angle), std::sin(angle)};
  const double h = layout.arena_half_extent;

  RayHit hit;
  hit.distance = std::numeric_limits<double>::infinity();

  double t_wall = std::numeric_limits<double>::infinity();
  if (d.x > 0.0) t_wall = std::min(t_wall, (h - origin.x) / d.x);
  if (d.x < 0.0) t_wall = std::min(t_wall, (-h - origin.x) / d.x);
  if (d.y > 0.0) t_wall = std::min(t_wall, (h - origin.y) / d.y);
  if (d.y < 0.0) t_wall = std::min(t_wall, (-h - origin.y) / d.y);
  if (t_wall < hit.distance) {
    hit.distance = std::max(t_wall, 0.0);
    hit.kind = SurfaceKind::Wall;
  }

  for (const auto& o : layout.obstacles) {
    const Vec2 rel = origin - o.center;
    const double b = d.dot(rel);
    const double c = rel.dot(rel) - o.radius * o.radius;
    const double disc = b * b - c;
    if (disc < 0.0) continue;
    const double t = -b - std::sqrt(disc);
    if (t >= 0.0 && t < hit.distance) {
      hit.distance = t;
      hit.kind = SurfaceKind::Obstacle;
      hit.appearance_id = o.appearance_id;
    }
  }
  return hit;
}

bool in_collision(const SceneLayout& layout, Vec2 p, double robot_radius) {
  const double lim = layout.arena_half_extent - robot_radius;
  if (std::abs(p.x) > lim || std::abs(p.y) > lim) return true;
  for (const auto& o : layout.obstacles) {
    const double reach = o.radius + robot_radius;
    const Vec2 rel = p - o.center;
    if (rel.dot(rel) < reach * reach) return true;
  }
  return false;
}

Observation raycast(const SceneLayout& layout, const AppearanceSkin& skin, const Pose& pose,
                    const CameraRig& rig, double d_max, double d_shade) {
  const Vec2 p = pose.position();
  if (layout.wall_clearance(p) <= 0.0 || layout.obstacle_clearance(p) <= 0.0) {
    std::ostringstream msg;
    msg << "cannot render from pose (" << pose.x << ", " << pose.y << ") inside geometry";
    throw RenderFromCollisionError(msg.str());
  }
  if (!skin.covers(layout)) throw RangeError("skin palette does not cover layout appearance ids");

  Observation obs;
  obs.cameras = rig.camera_count;
  obs.rays = rig.rays_per_camera;
  const auto W = static_cast<size_t>(rig.rays_per_camera);
  obs.depth.assign(static_cast<size_t>(rig.camera_count) * W, 0.0);
  obs.rgb.assign(static_cast<size_t>(rig.camera_count) * 3 * W, 0.0);

  for (int c = 0; c < rig.camera_count; ++c) {
    const double axis = pose.psi + rig.yaw_offsets[static_cast<size_t>(c)];
    for (int k = 0; k < rig.rays_per_camera; ++k) {
      const RayHit hit = cast_ray(layout, p, axis + rig.ray_offset(k));
      double depth = hit.distance;
      Color base;
      if (depth > d_max) {
        depth = d_max;
        base = skin.background_color;
      } else if (hit.kind == SurfaceKind::Obstacle) {
        base = skin.palette[hit.appearance_id];
      } else {
        base = skin.wall_color;
      }
      const double shade = 1.0 / (1.0 + depth / d_shade);
      obs.depth[static_cast<size_t>(c) * W + static_cast<size_t>(k)] = depth;
      for (int ch = 0; ch < 3; ++ch) {
        obs.rgb[(static_cast<size_t>(c) * 3 + static_cast<size_t>(ch)) * W +
                static_cast<size_t>(k)] = base[static_cast<size_t>(ch)] * shade;
      }
    }
  }
  return obs;
}

void apply_depth_noise(Observation& obs, double sigma, double d_max, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& d : obs.depth) d = std::clamp(d * (1.0 + sigma * n(rng)), 1e-6, d_max);
}

StepResult step_dynamics(const Pose& pose, const Action& action, double dt,
                         const SceneLayout& layout, double robot_radius) {
  if (!(dt > 0.0)) throw RangeError("dt must be positive");
  const Vec2 v_world = rotate({action.vx, action.vy}, pose.psi);
  StepResult r;
  r.pose.x = pose.x + v_world.x * dt;
  r.pose.y = pose.y + v_world.y * dt;
  r.pose.psi = wrap_angle(pose.psi + action.omega * dt);
  r.collided = in_collision(layout, r.pose.position(), robot_radius);
  return r;
}

Vec2 goal_local(const Pose& pose, const GoalSpec& goal, double t) {
  return rotate(goal.position_at(t) - pose.position(), -pose.psi);
}

double reward(double distance_to_goal, bool hit_obstacle, bool hit_boundary, double alpha) {
  double r = -alpha * std::abs(distance_to_goal);
  if (hit_obstacle) r -= 10.0;
  if (hit_boundary) r -= 10.0;
  return r;
}

}  // namespace okd::sim
