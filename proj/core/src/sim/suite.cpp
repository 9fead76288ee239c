#include "okd/sim/suite.hpp"

#include "okd/errors.hpp"
#include "okd/sim/world.hpp"

namespace okd::sim {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SceneSuite make_suite(const SuiteSpec& spec) {
  if (spec.layouts < 1 || spec.skins_per_layout < 1) {
    throw RangeError("a suite needs at least one layout and one skin per layout");
  }
  SceneSuite suite;
  std::uint32_t id = spec.first_scene_id;
  for (int l = 0; l < spec.layouts; ++l) {
    const std::uint64_t layout_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(l));
    SceneLayout layout;
    if (spec.obstacle_free) {
      layout.arena_half_extent = spec.gen.arena_half_extent;
      layout = resample_start_goal(layout, layout_seed, spec.gen);
    } else {
      layout = generate_scene(layout_seed, spec.density, spec.counts, spec.gen);
    }
    // Palettes are sized for the largest count so skins can be swapped between layouts.
    const auto n_ids = static_cast<std::uint32_t>(std::max(spec.counts.max, 1));
    for (int s = 0; s < spec.skins_per_layout; ++s) {
      const auto k = spec.skin_stream + static_cast<std::uint64_t>(s);
      const std::uint64_t skin_seed = spec.shared_skins ? mix_seed(spec.seed, k) : mix_seed(layout_seed, k);
      suite.scenes.push_back({id++, layout_seed, skin_seed, layout, generate_skin(skin_seed, n_ids)});
    }
  }
  return suite;
}

SceneLayout episode_layout(const SceneSuite& suite, size_t episode, std::uint64_t seed,
                           const SceneGenOptions& gen) {
  if (suite.empty()) throw RangeError("scene suite is empty");
  const auto& scene = suite.scenes[episode % suite.size()];
  return resample_start_goal(scene.layout, mix_seed(seed, episode), gen);
}

Dataset collect_episodes(Policy& policy, Policy& expert, const SceneSuite& suite,
                         const CollectOptions& opts) {
  Dataset ds;
  ds.rays_per_camera = static_cast<std::uint32_t>(opts.sim.rig.rays_per_camera);
  ds.camera_count = static_cast<std::uint32_t>(opts.sim.rig.camera_count);
  RolloutOptions ro;
  ro.horizon = opts.sim.horizon;
  for (int e = 0; e < opts.episodes; ++e) {
    const auto ue = static_cast<size_t>(e);
    const auto& scene = suite.scenes.at(ue % suite.size());
    const SceneLayout layout = episode_layout(suite, ue, opts.seed, opts.gen);
    ro.noise_seed = mix_seed(opts.seed ^ 0x5bd1e995ULL, ue);
    const EpisodeRecord ep = rollout(policy, layout, scene.skin, expert, opts.sim, ro);
    ds.append_episode(ep, scene.scene_id);
    if (opts.render_all_skins) {
      for (const auto& other : suite.scenes) {
        if (other.scene_id == scene.scene_id || other.layout_seed != scene.layout_seed) continue;
        EpisodeRecord copy = ep;
        for (auto& tu : copy.tuples) {
          tu.obs.rgb = raycast(layout, other.skin, tu.pose, opts.sim.rig, opts.sim.d_max, opts.sim.d_shade).rgb;
        }
        ds.append_episode(copy, other.scene_id);
      }
    }
    if (opts.max_tuples > 0 && ds.size() >= opts.max_tuples) {
      ds.records.resize(opts.max_tuples);
      break;
    }
  }
  return ds;
}

}  // namespace okd::sim
