#pragma once

#include <cstdint>
#include <vector>

#include "okd/sim/dataset.hpp"
#include "okd/sim/rollout.hpp"
#include "okd/sim/scene.hpp"

namespace okd::sim {

/// splitmix64 of base combined with a stream index; used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// One (layout, skin) pair. scene_id is what datasets record.
struct SuiteScene {
  std::uint32_t scene_id = 0;
  std::uint64_t layout_seed = 0;
  std::uint64_t skin_seed = 0;
  SceneLayout layout;
  AppearanceSkin skin;
};

struct SceneSuite {
  std::vector<SuiteScene> scenes;
  bool empty() const { return scenes.empty(); }
  size_t size() const { return scenes.size(); }
};

struct SuiteSpec {
  std::uint64_t seed = 0;
  int layouts = 4;
  int skins_per_layout = 1;
  // Draw every layout's skins from one pool, so colours say nothing about the layout.
  bool shared_skins = false;
  double density = 0.12;
  CountRange counts;
  bool obstacle_free = false;
  std::uint32_t first_scene_id = 0;
  // Skin seeds come from streams skin_stream, skin_stream + 1, ...; two specs
  // with the same seed and different skin streams share layouts but not skins.
  std::uint64_t skin_stream = 1000;
  SceneGenOptions gen;
};

/// layouts x skins_per_layout scenes, layout-major. Layout and skin seeds are
/// derived from spec.seed, so the same spec always gives the same suite.
SceneSuite make_suite(const SuiteSpec& spec);

/// Layout for episode e of a suite: scene e mod size, start and goal resampled
/// from mix_seed(seed, e).
SceneLayout episode_layout(const SceneSuite& suite, size_t episode, std::uint64_t seed,
                           const SceneGenOptions& gen = {});

struct CollectOptions {
  int episodes = 10;
  size_t max_tuples = 0;  // 0 = keep every tuple; otherwise stop and truncate at this count
  std::uint64_t seed = 0;
  SimConfig sim;
  SceneGenOptions gen;
  // Also store every episode as seen through the other skins of its layout.
  bool render_all_skins = false;
};

/// Rolls policy out over the suite, one scene per episode in turn, and stores
/// every tuple with the expert's label. With render_all_skins each episode is
/// followed by copies re-rendered in the suite's other skins of the same layout,
/// each stored under that scene's id.
Dataset collect_episodes(Policy& policy, Policy& expert, const SceneSuite& suite,
                         const CollectOptions& opts);

}  // namespace okd::sim
