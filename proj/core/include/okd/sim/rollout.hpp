#pragma once

#include <cstdint>

#include "okd/sim/types.hpp"

namespace okd::sim {

/// What a policy sees at one control step. Privileged fields (layout, pose)
/// are there for state-based experts; visual policies only read obs and goal.
struct StepInput {
  const SceneLayout& layout;
  Pose pose;
  const Observation& obs;
  Vec2 goal_local;
  double time = 0.0;
  int step = 0;
  // Expert label at this state; null while the expert itself is queried.
  const Action* expert_action = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;
  /// Called at the start of every episode.
  virtual void reset() {}
  virtual Action act(const StepInput& in) = 0;
};

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(Action a = {}) : action_(a) {}
  Action act(const StepInput&) override { return action_; }

 private:
  Action action_;
};

/// Executes whatever the expert labelled at this state.
class ExpertPassthroughPolicy final : public Policy {
 public:
  Action act(const StepInput& in) override { return *in.expert_action; }
};

struct RolloutOptions {
  int horizon = 600;
  double reward_alpha = 1.0;
  std::uint64_t noise_seed = 0;  // only used when SimConfig::depth_noise > 0
};

/// Runs one episode from layout.start. Terminates on the first collision, on
/// reaching the goal within success_radius, or at the horizon. Each tuple
/// stores the executed action and the expert's label at that state.
/// Throws PolicyFaultError when the policy returns a non-finite action.
EpisodeRecord rollout(Policy& policy, const SceneLayout& layout, const AppearanceSkin& skin,
                      Policy& expert, const SimConfig& cfg, const RolloutOptions& opts);

}  // namespace okd::sim
