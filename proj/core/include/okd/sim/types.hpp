#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace okd::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

/// Rotates v counter-clockwise by angle.
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose&) const = default;
};

/// Holonomic velocity command in the robot's local frame.
struct Action {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  bool operator==(const Action&) const = default;
  bool finite() const {
    return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega);
  }
};

struct ActionLimits {
  double v_max = 1.0;
  double omega_max = 2.0;
};

inline Action clamp_action(Action a, const ActionLimits& lim) {
  return {std::clamp(a.vx, -lim.v_max, lim.v_max), std::clamp(a.vy, -lim.v_max, lim.v_max),
          std::clamp(a.omega, -lim.omega_max, lim.omega_max)};
}

using Color = std::array<double, 3>;

struct ObstacleSpec {
  Vec2 center;
  double radius = 0.0;
  std::uint32_t appearance_id = 0;
};

struct GoalSpec {
  enum class Kind { Static, Circular };
  Kind kind = Kind::Static;
  Vec2 point;            // static
  Vec2 center;           // circular
  double orbit_radius = 1.0;
  double angular_speed = 0.5;
  double phase = 0.0;

  /// World position of the goal at time t (seconds).
  Vec2 position_at(double t) const {
    if (kind == Kind::Static) return point;
    const double a = phase + angular_speed * t;
    return {center.x + orbit_radius * std::cos(a), center.y + orbit_radius * std::sin(a)};
  }
};

struct SceneLayout {
  double arena_half_extent = 2.0;
  std::vector<ObstacleSpec> obstacles;
  Pose start;
  GoalSpec goal;
  double density = 0.0;

  double arena_area() const { return 4.0 * arena_half_extent * arena_half_extent; }
  double obstacle_area() const {
    double a = 0.0;
    for (const auto& o : obstacles) a += std::numbers::pi * o.radius * o.radius;
    return a;
  }
  /// Smallest distance from p to any obstacle surface (negative inside), or +inf.
  double obstacle_clearance(Vec2 p) const;
  /// Smallest distance from p to the arena boundary (negative outside).
  double wall_clearance(Vec2 p) const {
    return std::min(arena_half_extent - std::abs(p.x), arena_half_extent - std::abs(p.y));
  }
  std::uint32_t max_appearance_id() const;
};

/// Cosmetic colour assignment for a layout. Geometry never depends on it.
struct AppearanceSkin {
  std::vector<Color> palette;  // indexed by appearance_id
  Color wall_color{0.6, 0.6, 0.6};
  Color background_color{0.0, 0.0, 0.0};

  bool covers(const SceneLayout& layout) const;
};

struct CameraRig {
  int camera_count = 4;
  std::array<double, 4> yaw_offsets{0.0, std::numbers::pi / 2, std::numbers::pi,
                                    3.0 * std::numbers::pi / 2};
  double fov = 110.0 * std::numbers::pi / 180.0;
  int rays_per_camera = 64;

  /// Angle of ray k relative to the camera axis; rays span [-fov/2, +fov/2]
  /// counter-clockwise with both endpoints included.
  double ray_offset(int k) const {
    if (rays_per_camera == 1) return 0.0;
    return -fov / 2.0 + k * (fov / (rays_per_camera - 1));
  }
};

/// One frame of the ray sensor: depth is [camera][ray], rgb is [camera][channel][ray].
struct Observation {
  int cameras = 0;
  int rays = 0;
  std::vector<double> depth;
  std::vector<double> rgb;

  double depth_at(int c, int k) const { return depth[static_cast<size_t>(c * rays + k)]; }
  double rgb_at(int c, int ch, int k) const {
    return rgb[static_cast<size_t>((c * 3 + ch) * rays + k)];
  }
};

/// Simulation knobs shared by dynamics, rendering and rollouts.
struct SimConfig {
  double dt = 1.0 / 30.0;
  int horizon = 600;
  double robot_radius = 0.15;
  ActionLimits limits;
  double d_max = 6.0;
  double d_shade = 2.0;
  double r_clear = 0.3;
  double success_radius = 0.3;
  double depth_noise = 0.0;  // multiplicative, off by default
  CameraRig rig;
};

enum class Outcome { Success, Collision, Timeout };

const char* to_string(Outcome o);

struct EpisodeTuple {
  Pose pose;
  Observation obs;
  Vec2 goal_local;
  Action expert_action;
  Action executed_action;
  int t = 0;
};

struct EpisodeRecord {
  std::vector<EpisodeTuple> tuples;
  Outcome outcome = Outcome::Timeout;
  double moving_distance = 0.0;
  Pose final_pose;
  double final_goal_distance = 0.0;
  double total_reward = 0.0;
};

}  // namespace okd::sim
