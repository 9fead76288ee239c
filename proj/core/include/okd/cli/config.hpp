#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "okd/distill/train.hpp"
#include "okd/expert/expert.hpp"
#include "okd/sim/scene.hpp"
#include "okd/sim/types.hpp"

namespace okd::cli {

struct SceneConfig {
  int train_layouts = 4;
  int train_skins = 4;  // skins per training layout
  int test_layouts = 4;
  int test_skins = 1;   // held-out skins per test layout
  // Test on fresh layouts instead of the first test_layouts training layouts.
  bool test_new_layouts = false;
  double density = 0.12;
  int min_obstacles = 3;
  int max_obstacles = 8;
  sim::GoalMode goal_mode = sim::GoalMode::Static;
  double orbit_radius = 1.0;
  double angular_speed = 0.5;
};

struct CollectConfig {
  size_t train_tuples = 5000;
  size_t test_tuples = 1000;
  int episodes = 0;  // cap on episodes per dataset, 0 = until the tuple count is reached
  bool render_all_skins = false;  // training data only
};

struct NetSizes {
  size_t teacher_embed = 64;
  size_t student_embed = 64;
  size_t goal_embed = 16;
  size_t head_hidden = 64;
  int seq_len = 5;
};

struct EvalConfig {
  int episodes_per_scene = 20;
  int sim_skins = 4;
  int probe_stride = 5;
};

/// Every knob of a run. Loaded from flat `key = value` text.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  sim::SimConfig sim;
  SceneConfig scenes;
  expert::ExpertConfig expert;
  CollectConfig collect;
  NetSizes net;
  distill::TrainConfig train;
  EvalConfig eval;
  int checkpoint_every = 0;  // epochs between OKW1 checkpoints, 0 = final weights only

  distill::NetConfig teacher_net() const;
  distill::NetConfig student_net() const;
  sim::SceneGenOptions gen_options() const;
  /// Training settings with the run seed filled in.
  distill::TrainConfig train_config() const;
  /// Expert gains with the shared sim limits filled in.
  expert::ExpertConfig expert_config() const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
};

/// All accepted keys in echo order.
const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` lines (blank lines and # comments ignored) over the
/// defaults, then applies overrides of the form key=value, then validates.
/// Throws UnknownKeyError (with the closest key as suggestion) or ConfigError.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

/// Cross-field checks; errors name both fields involved.
void validate(const ExperimentConfig& cfg);

/// Effective configuration in the same text format; parsing it gives back cfg.
std::string to_text(const ExperimentConfig& cfg);

/// Levenshtein distance, used for key suggestions.
size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace okd::cli
