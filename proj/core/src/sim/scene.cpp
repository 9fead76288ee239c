#include "okd/sim/scene.hpp"

#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "okd/errors.hpp"

namespace okd::sim {

namespace {

constexpr double kDensityMin = 0.05;
constexpr double kDensityMax = 0.20;
constexpr int kLayoutRestarts = 25;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool point_clear(const SceneLayout& layout, Vec2 p, double r_clear) {
  return layout.wall_clearance(p) >= r_clear && layout.obstacle_clearance(p) >= r_clear;
}

// Minimum distance between a circle (center c, radius R) and a point q.
double orbit_distance(Vec2 c, double R, Vec2 q) { return std::abs((q - c).norm() - R); }

bool goal_clear(const SceneLayout& layout, const GoalSpec& goal, double r_clear) {
  if (goal.kind == GoalSpec::Kind::Static) return point_clear(layout, goal.point, r_clear);
  const double h = layout.arena_half_extent;
  const double reach = goal.orbit_radius + r_clear;
  if (std::abs(goal.center.x) + reach > h || std::abs(goal.center.y) + reach > h) return false;
  for (const auto& o : layout.obstacles) {
    if (orbit_distance(goal.center, goal.orbit_radius, o.center) - o.radius < r_clear) return false;
  }
  return true;
}

// Circular goals are fixed before obstacles so that the orbit stays free.
GoalSpec sample_orbit(std::mt19937_64& rng, double h, const SceneGenOptions& opts) {
  GoalSpec g;
  g.kind = GoalSpec::Kind::Circular;
  g.orbit_radius = opts.orbit_radius;
  g.angular_speed = opts.angular_speed;
  const double clim = std::max(h - opts.orbit_radius - opts.r_clear, 0.0);
  g.center = {uniform(rng, -clim, clim), uniform(rng, -clim, clim)};
  g.phase = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return g;
}

bool sample_endpoints(SceneLayout& layout, std::mt19937_64& rng, const SceneGenOptions& opts,
                      const GoalSpec* fixed_goal) {
  const double lim = layout.arena_half_extent - opts.r_clear;
  for (int attempt = 0; attempt < opts.attempt_budget; ++attempt) {
    Vec2 s{uniform(rng, -lim, lim), uniform(rng, -lim, lim)};
    if (!point_clear(layout, s, opts.r_clear)) continue;
    GoalSpec g;
    if (fixed_goal) {
      g = *fixed_goal;
    } else {
      g.point = {uniform(rng, -lim, lim), uniform(rng, -lim, lim)};
    }
    if (!goal_clear(layout, g, opts.r_clear)) continue;
    if ((g.position_at(0.0) - s).norm() < opts.min_start_goal_distance) continue;
    // The start must not sit on the orbit of a moving goal.
    if (g.kind == GoalSpec::Kind::Circular &&
        orbit_distance(g.center, g.orbit_radius, s) < opts.r_clear) {
      continue;
    }
    layout.start = {s.x, s.y, uniform(rng, -std::numbers::pi, std::numbers::pi)};
    layout.goal = g;
    return true;
  }
  return false;
}

bool choose_circular(std::mt19937_64& rng, GoalMode mode) {
  if (mode == GoalMode::Mixed) return uniform(rng, 0.0, 1.0) < 0.5;
  return mode == GoalMode::Circular;
}

}  // namespace

double SceneLayout::obstacle_clearance(Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : obstacles) best = std::min(best, (p - o.center).norm() - o.radius);
  return best;
}

std::uint32_t SceneLayout::max_appearance_id() const {
  std::uint32_t m = 0;
  for (const auto& o : obstacles) m = std::max(m, o.appearance_id);
  return m;
}

bool AppearanceSkin::covers(const SceneLayout& layout) const {
  return layout.obstacles.empty() || layout.max_appearance_id() < palette.size();
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success:
      return "success";
    case Outcome::Collision:
      return "collision";
    case Outcome::Timeout:
      return "timeout";
  }
  return "unknown";
}

bool endpoints_clear(const SceneLayout& layout, double r_clear) {
  return point_clear(layout, layout.start.position(), r_clear) &&
         goal_clear(layout, layout.goal, r_clear);
}

SceneLayout generate_scene(std::uint64_t seed, double density_target, CountRange counts,
                           const SceneGenOptions& opts) {
  if (!(density_target >= kDensityMin && density_target <= kDensityMax)) {
    std::ostringstream msg;
    msg << "density_target " << density_target << " outside [" << kDensityMin << ", "
        << kDensityMax << "]";
    throw RangeError(msg.str());
  }
  if (counts.min < 1 || counts.max < counts.min) {
    throw RangeError("obstacle count range must satisfy 1 <= min <= max");
  }

  std::mt19937_64 rng(seed);
  const double h = opts.arena_half_extent;

  for (int restart = 0; restart < kLayoutRestarts; ++restart) {
    SceneLayout layout;
    layout.arena_half_extent = h;
    std::optional<GoalSpec> orbit;
    if (choose_circular(rng, opts.goal_mode)) orbit = sample_orbit(rng, h, opts);
    const int n = std::uniform_int_distribution<int>(counts.min, counts.max)(rng);

    std::vector<double> weights(static_cast<size_t>(n));
    double wsum = 0.0;
    for (auto& w : weights) {
      w = uniform(rng, 0.6, 1.4);
      wsum += w;
    }
    const double target_area = density_target * layout.arena_area();

    bool placed_all = true;
    for (int i = 0; i < n && placed_all; ++i) {
      const double r = std::sqrt(weights[static_cast<size_t>(i)] / wsum * target_area /
                                 std::numbers::pi);
      if (r >= h) {
        placed_all = false;
        break;
      }
      bool placed = false;
      for (int attempt = 0; attempt < opts.attempt_budget && !placed; ++attempt) {
        Vec2 c{uniform(rng, -h + r, h - r), uniform(rng, -h + r, h - r)};
        bool ok = true;
        for (const auto& o : layout.obstacles) {
          if ((c - o.center).norm() - o.radius - r < opts.min_obstacle_gap) {
            ok = false;
            break;
          }
        }
        if (ok && orbit && orbit_distance(orbit->center, orbit->orbit_radius, c) - r < opts.r_clear) {
          ok = false;
        }
        if (ok) {
          layout.obstacles.push_back({c, r, static_cast<std::uint32_t>(i)});
          placed = true;
        }
      }
      placed_all = placed;
    }
    if (!placed_all) continue;

    layout.density = layout.obstacle_area() / layout.arena_area();
    if (!sample_endpoints(layout, rng, opts, orbit ? &*orbit : nullptr)) continue;
    return layout;
  }
  std::ostringstream msg;
  msg << "could not place scene (seed " << seed << ", density " << density_target << ")";
  throw PlacementInfeasibleError(msg.str());
}

SceneLayout empty_scene(Pose start, Vec2 goal, double arena_half_extent) {
  SceneLayout layout;
  layout.arena_half_extent = arena_half_extent;
  layout.start = start;
  layout.goal.kind = GoalSpec::Kind::Static;
  layout.goal.point = goal;
  return layout;
}

SceneLayout resample_start_goal(const SceneLayout& layout, std::uint64_t seed,
                                const SceneGenOptions& opts) {
  std::mt19937_64 rng(seed);
  SceneLayout out = layout;
  // Keep a moving goal's orbit: obstacles were placed around it.
  const GoalSpec* fixed = layout.goal.kind == GoalSpec::Kind::Circular ? &layout.goal : nullptr;
  if (!sample_endpoints(out, rng, opts, fixed)) {
    throw PlacementInfeasibleError("could not resample start/goal (seed " +
                                   std::to_string(seed) + ")");
  }
  return out;
}

AppearanceSkin generate_skin(std::uint64_t seed, std::uint32_t n_ids, double lo, double hi) {
  std::mt19937_64 rng(seed);
  AppearanceSkin skin;
  auto color = [&] {
    return Color{uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
  };
  skin.palette.reserve(n_ids);
  for (std::uint32_t i = 0; i < n_ids; ++i) skin.palette.push_back(color());
  skin.wall_color = color();
  skin.background_color = color();
  return skin;
}

}  // namespace okd::sim
