#include "okd/sim/rollout.hpp"

#include <random>
#include <sstream>

#include "okd/errors.hpp"
#include "okd/sim/world.hpp"

namespace okd::sim {

EpisodeRecord rollout(Policy& policy, const SceneLayout& layout, const AppearanceSkin& skin,
                      Policy& expert, const SimConfig& cfg, const RolloutOptions& opts) {
  if (opts.horizon < 1) throw RangeError("rollout horizon must be >= 1");

  EpisodeRecord rec;
  rec.tuples.reserve(static_cast<size_t>(opts.horizon));
  std::mt19937_64 noise_rng(opts.noise_seed);

  Pose pose = layout.start;
  policy.reset();
  expert.reset();

  auto goal_distance = [&](const Pose& p, double time) {
    return (layout.goal.position_at(time) - p.position()).norm();
  };

  bool done = false;
  for (int t = 0; t < opts.horizon; ++t) {
    const double time = t * cfg.dt;
    if (goal_distance(pose, time) <= cfg.success_radius) {
      rec.outcome = Outcome::Success;
      done = true;
      break;
    }

    Observation obs = raycast(layout, skin, pose, cfg.rig, cfg.d_max, cfg.d_shade);
    if (cfg.depth_noise > 0.0) apply_depth_noise(obs, cfg.depth_noise, cfg.d_max, noise_rng);

    StepInput in{layout, pose, obs, goal_local(pose, layout.goal, time), time, t, nullptr};
    const Action label = clamp_action(expert.act(in), cfg.limits);
    in.expert_action = &label;
    const Action raw = policy.act(in);
    if (!raw.finite()) {
      std::ostringstream msg;
      msg << "policy produced a non-finite action at step " << t;
      throw PolicyFaultError(msg.str());
    }
    const Action executed = clamp_action(raw, cfg.limits);

    const StepResult next = step_dynamics(pose, executed, cfg.dt, layout, cfg.robot_radius);
    rec.moving_distance += (next.pose.position() - pose.position()).norm();

    bool hit_obstacle = false;
    bool hit_boundary = false;
    if (next.collided) {
      const Vec2 q = next.pose.position();
      hit_boundary = layout.wall_clearance(q) < cfg.robot_radius;
      hit_obstacle = layout.obstacle_clearance(q) < cfg.robot_radius;
    }
    rec.total_reward += reward(goal_distance(next.pose, time + cfg.dt), hit_obstacle,
                               hit_boundary, opts.reward_alpha);

    rec.tuples.push_back({pose, std::move(obs), in.goal_local, label, executed, t});
    pose = next.pose;
    if (next.collided) {
      rec.outcome = Outcome::Collision;
      done = true;
      break;
    }
  }

  const double end_time = static_cast<double>(rec.tuples.size()) * cfg.dt;
  if (!done) {
    rec.outcome = goal_distance(pose, end_time) <= cfg.success_radius ? Outcome::Success
                                                                      : Outcome::Timeout;
  }
  rec.final_pose = pose;
  rec.final_goal_distance = goal_distance(pose, end_time);
  return rec;
}

}  // namespace okd::sim
